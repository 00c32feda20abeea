#include "stelle/parser.hpp"

#include <cctype>
#include <charconv>
#include <vector>

namespace stelle {

namespace {

enum class Tok { Ident, Number, LParen, RParen, LBracket, RBracket, Comma, Ge, Le, Question, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view s) : src_(s) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      const int line = line_, col = col_;
      if (pos_ >= src_.size()) {
        out.push_back({Tok::End, "", line, col});
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string id;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          id += advance();
        out.push_back({Tok::Ident, id, line, col});
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
                 ((c == '-' || c == '+') && pos_ + 1 < src_.size() &&
                  (std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])) || src_[pos_ + 1] == '.'))) {
        std::string num;
        num += advance();
        while (pos_ < src_.size()) {
          const char d = src_[pos_];
          if (std::isdigit(static_cast<unsigned char>(d)) || d == '.') {
            num += advance();
          } else if ((d == 'e' || d == 'E') && pos_ + 1 < src_.size()) {
            num += advance();
            if (src_[pos_] == '-' || src_[pos_] == '+') num += advance();
          } else {
            break;
          }
        }
        out.push_back({Tok::Number, num, line, col});
      } else if (c == '>' || c == '<') {
        advance();
        // strict comparisons are accepted and read as their non-strict form
        if (pos_ < src_.size() && src_[pos_] == '=') advance();
        out.push_back({c == '>' ? Tok::Ge : Tok::Le, c == '>' ? ">=" : "<=", line, col});
      } else {
        advance();
        switch (c) {
          case '(': out.push_back({Tok::LParen, "(", line, col}); break;
          case ')': out.push_back({Tok::RParen, ")", line, col}); break;
          case '[': out.push_back({Tok::LBracket, "[", line, col}); break;
          case ']': out.push_back({Tok::RBracket, "]", line, col}); break;
          case ',': out.push_back({Tok::Comma, ",", line, col}); break;
          case '?': out.push_back({Tok::Question, "?", line, col}); break;
          default:
            throw ParseError(std::string("unexpected character '") + c + "'", line, col);
        }
      }
    }
  }

 private:
  char advance() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Formula parse_all() {
    Formula f = parse_or();
    if (peek().kind != Tok::End) fail("unexpected token '" + peek().text + "'");
    return f;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, peek().line, peek().column); }

  bool is_keyword(const char* kw) const { return peek().kind == Tok::Ident && peek().text == kw; }

  void expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(std::string("expected ") + what);
    ++pos_;
  }

  Formula parse_or() {
    Formula lhs = parse_and();
    while (is_keyword("or")) {
      ++pos_;
      lhs = Formula::disjunction(lhs, parse_and());
    }
    return lhs;
  }

  Formula parse_and() {
    Formula lhs = parse_until();
    while (is_keyword("and")) {
      ++pos_;
      lhs = Formula::conjunction(lhs, parse_until());
    }
    return lhs;
  }

  Formula parse_until() {
    Formula lhs = parse_unary();
    while (is_keyword("U")) {
      ++pos_;
      const Interval iv = parse_interval();
      lhs = Formula::until(iv, lhs, parse_unary());
    }
    return lhs;
  }

  Formula parse_unary() {
    if (is_keyword("not")) {
      ++pos_;
      return Formula::negation(parse_unary());
    }
    if (is_keyword("F") || is_keyword("G")) {
      const bool ev = next().text == "F";
      const Interval iv = parse_interval();
      Formula body = parse_unary();
      return ev ? Formula::eventually(iv, body) : Formula::globally(iv, body);
    }
    return parse_primary();
  }

  Formula parse_primary() {
    if (peek().kind == Tok::LParen) {
      ++pos_;
      Formula f = parse_or();
      expect(Tok::RParen, "')'");
      return f;
    }
    if (is_keyword("True")) {
      ++pos_;
      return Formula::truth();
    }
    if (peek().kind == Tok::Ident) {
      const std::string& id = peek().text;
      if (id.size() < 2 || id[0] != 'x') fail("unknown variable token '" + id + "'");
      int var = 0;
      auto [p, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), var);
      if (ec != std::errc() || p != id.data() + id.size()) fail("unknown variable token '" + id + "'");
      ++pos_;
      Relation rel;
      if (peek().kind == Tok::Ge) {
        rel = Relation::GreaterEq;
      } else if (peek().kind == Tok::Le) {
        rel = Relation::LessEq;
      } else {
        fail("expected '>=' or '<='");
      }
      ++pos_;
      double thr = 0.0;
      if (peek().kind == Tok::Question) {
        thr = Atom::placeholder_threshold();
        ++pos_;
      } else {
        thr = parse_number();
      }
      return Formula::atom(var, rel, thr);
    }
    if (peek().kind == Tok::End) fail("unexpected end of input");
    fail("unexpected token '" + peek().text + "'");
  }

  double parse_number() {
    if (peek().kind != Tok::Number) fail("expected number");
    const std::string& s = peek().text;
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+') ++first;
    auto [p, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail("malformed number '" + s + "'");
    ++pos_;
    return v;
  }

  int parse_int() {
    if (peek().kind != Tok::Number) fail("expected integer");
    const std::string& s = peek().text;
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v < 0) fail("malformed interval bound '" + s + "'");
    ++pos_;
    return v;
  }

  Interval parse_interval() {
    expect(Tok::LBracket, "'['");
    if (peek().kind == Tok::Question) {
      ++pos_;
      expect(Tok::Comma, "','");
      if (peek().kind != Tok::Question) fail("expected '?'");
      ++pos_;
      expect(Tok::RBracket, "']'");
      return Interval::placeholder();
    }
    const Token& start = peek();
    const int lo = parse_int();
    expect(Tok::Comma, "','");
    const int hi = parse_int();
    expect(Tok::RBracket, "']'");
    if (hi < lo) throw ParseError("interval upper bound below lower bound", start.line, start.column);
    return {lo, hi};
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

Formula parse(std::string_view text) { return Parser(Lexer(text).run()).parse_all(); }

}  // namespace stelle
