#include "stelle/formula.hpp"

#include <charconv>
#include <functional>
#include <stdexcept>
#include <tuple>

namespace stelle {

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

const std::shared_ptr<const FormulaNode>& true_node() {
  static const std::shared_ptr<const FormulaNode> node = [] {
    auto n = std::make_shared<FormulaNode>();
    n->op = Op::True;
    n->hash = mix(0, static_cast<std::size_t>(Op::True));
    return n;
  }();
  return node;
}

int arity_of(Op op) {
  switch (op) {
    case Op::True:
    case Op::Atom:
      return 0;
    case Op::Not:
    case Op::Eventually:
    case Op::Globally:
      return 1;
    default:
      return 2;
  }
}

bool is_temporal(Op op) { return op == Op::Eventually || op == Op::Globally || op == Op::Until; }

}  // namespace

Formula::Formula() : node_(true_node()) {}

Formula Formula::make(Op op, Atom atom, Interval iv, const Formula* a, const Formula* b) {
  auto n = std::make_shared<FormulaNode>();
  n->op = op;
  std::size_t h = mix(0, static_cast<std::size_t>(op));
  if (op == Op::Atom) {
    n->atom = atom;
    h = mix(h, static_cast<std::size_t>(atom.var));
    h = mix(h, static_cast<std::size_t>(atom.rel));
    h = mix(h, atom.has_placeholder() ? 0x7ff8ULL : std::hash<double>{}(atom.threshold + 0.0));
  }
  if (is_temporal(op)) {
    if (!iv.is_placeholder() && (iv.lo < 0 || iv.hi < iv.lo))
      throw std::invalid_argument("interval requires 0 <= lo <= hi");
    n->interval = iv;
    h = mix(h, static_cast<std::size_t>(iv.lo + 7));
    h = mix(h, static_cast<std::size_t>(iv.hi + 7));
  }
  int nodes = 1;
  int child_horizon = 0;
  if (a) {
    n->children[0] = a->node_;
    nodes += a->node_->nodes;
    child_horizon = a->node_->horizon;
    h = mix(h, a->node_->hash);
  }
  if (b) {
    n->children[1] = b->node_;
    nodes += b->node_->nodes;
    child_horizon = std::max(child_horizon, b->node_->horizon);
    h = mix(h, b->node_->hash);
  }
  n->nodes = nodes;
  n->horizon = child_horizon + (is_temporal(op) && !iv.is_placeholder() ? iv.hi : 0);
  n->hash = h;
  return Formula(std::move(n));
}

Formula Formula::truth() { return Formula(); }
Formula Formula::falsity() { return negation(truth()); }

Formula Formula::atom(int var, Relation rel, double threshold) { return atom(Atom{var, rel, threshold}); }

Formula Formula::atom(const Atom& a) {
  if (a.var < 0) throw std::invalid_argument("atom variable index must be >= 0");
  return make(Op::Atom, a, {}, nullptr, nullptr);
}

Formula Formula::negation(Formula f) { return make(Op::Not, {}, {}, &f, nullptr); }
Formula Formula::conjunction(Formula a, Formula b) { return make(Op::And, {}, {}, &a, &b); }
Formula Formula::disjunction(Formula a, Formula b) { return make(Op::Or, {}, {}, &a, &b); }
Formula Formula::eventually(Interval i, Formula f) { return make(Op::Eventually, {}, i, &f, nullptr); }
Formula Formula::globally(Interval i, Formula f) { return make(Op::Globally, {}, i, &f, nullptr); }
Formula Formula::until(Interval i, Formula lhs, Formula rhs) { return make(Op::Until, {}, i, &lhs, &rhs); }

Op Formula::op() const { return node_->op; }
const Atom& Formula::atom() const { return node_->atom; }
Interval Formula::interval() const { return node_->interval; }
Formula Formula::lhs() const { return node_->children[0] ? Formula(node_->children[0]) : Formula(); }
Formula Formula::rhs() const { return node_->children[1] ? Formula(node_->children[1]) : Formula(); }
int Formula::arity() const { return arity_of(node_->op); }
bool Formula::is_false() const { return op() == Op::Not && lhs().is_true(); }
int Formula::node_count() const { return node_->nodes; }
int Formula::horizon() const { return node_->horizon; }
std::size_t Formula::hash() const { return node_->hash; }

Formula Formula::with_children(const Formula& a, const Formula& b) const {
  switch (arity()) {
    case 0:
      return *this;
    case 1:
      if (a.node_ == node_->children[0]) return *this;
      return make(op(), atom(), interval(), &a, nullptr);
    default:
      if (a.node_ == node_->children[0] && b.node_ == node_->children[1]) return *this;
      return make(op(), atom(), interval(), &a, &b);
  }
}

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  const FormulaNode& x = *a.node_;
  const FormulaNode& y = *b.node_;
  if (x.hash != y.hash || x.op != y.op || x.nodes != y.nodes) return false;
  if (x.op == Op::Atom && !(x.atom == y.atom)) return false;
  if (is_temporal(x.op) && !(x.interval == y.interval)) return false;
  const int n = arity_of(x.op);
  for (int i = 0; i < n; ++i)
    if (!(Formula(x.children[i]) == Formula(y.children[i]))) return false;
  return true;
}

bool structural_less(const Formula& a, const Formula& b) {
  if (a.node_count() != b.node_count()) return a.node_count() < b.node_count();
  if (a.op() != b.op()) return a.op() < b.op();
  if (a.op() == Op::Atom) {
    const Atom& x = a.atom();
    const Atom& y = b.atom();
    if (x.var != y.var) return x.var < y.var;
    if (x.rel != y.rel) return x.rel < y.rel;
    if (x.threshold != y.threshold) return x.threshold < y.threshold;
    return false;
  }
  if (is_temporal(a.op()) && !(a.interval() == b.interval())) {
    const Interval x = a.interval(), y = b.interval();
    return std::tie(x.lo, x.hi) < std::tie(y.lo, y.hi);
  }
  for (int i = 0; i < a.arity(); ++i) {
    const Formula ca = i == 0 ? a.lhs() : a.rhs();
    const Formula cb = i == 0 ? b.lhs() : b.rhs();
    if (structural_less(ca, cb)) return true;
    if (structural_less(cb, ca)) return false;
  }
  return false;
}

int node_count(const Formula& f) { return f.node_count(); }
int temporal_horizon(const Formula& f) { return f.horizon(); }

namespace {

void collect_vars(const Formula& f, std::set<int>& out) {
  if (f.op() == Op::Atom) {
    out.insert(f.atom().var);
    return;
  }
  if (f.arity() >= 1) collect_vars(f.lhs(), out);
  if (f.arity() == 2) collect_vars(f.rhs(), out);
}

int rescale_bound(int b, int from_len, int to_len) {
  // round-half-up of b * to / from in exact integer arithmetic
  const long long num = 2LL * b * to_len + from_len;
  return static_cast<int>(num / (2LL * from_len));
}

}  // namespace

std::set<int> variable_set(const Formula& f) {
  std::set<int> out;
  collect_vars(f, out);
  return out;
}

bool has_placeholders(const Formula& f) {
  if (f.op() == Op::Atom) return f.atom().has_placeholder();
  if (is_temporal(f.op()) && f.interval().is_placeholder()) return true;
  if (f.arity() >= 1 && has_placeholders(f.lhs())) return true;
  return f.arity() == 2 && has_placeholders(f.rhs());
}

Formula rescale_time(const Formula& f, int from_len, int to_len) {
  if (from_len < 1 || to_len < 1) throw std::invalid_argument("rescale_time: lengths must be >= 1");
  if (from_len == to_len || f.arity() == 0) return f;
  const Formula a = rescale_time(f.lhs(), from_len, to_len);
  const Formula b = f.arity() == 2 ? rescale_time(f.rhs(), from_len, to_len) : a;
  if (!is_temporal(f.op()) || f.interval().is_placeholder()) return f.with_children(a, b);
  Interval iv{rescale_bound(f.interval().lo, from_len, to_len), rescale_bound(f.interval().hi, from_len, to_len)};
  if (iv.hi < iv.lo) iv.hi = iv.lo;
  switch (f.op()) {
    case Op::Eventually:
      return Formula::eventually(iv, a);
    case Op::Globally:
      return Formula::globally(iv, a);
    default:
      return Formula::until(iv, a, b);
  }
}

// ---------------------------------------------------------------------------
// printing

namespace {

void print_number(std::string& out, double v) {
  if (std::isnan(v)) {
    out += '?';
    return;
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void print_interval(std::string& out, Interval iv) {
  if (iv.is_placeholder()) {
    out += "[?,?]";
    return;
  }
  out += '[';
  out += std::to_string(iv.lo);
  out += ',';
  out += std::to_string(iv.hi);
  out += ']';
}

void print(std::string& out, const Formula& f);

// Atoms and binary nodes are parenthesised when they appear as operands.
void print_operand(std::string& out, const Formula& f) {
  const bool wrap = f.op() == Op::Atom || f.arity() == 2;
  if (wrap) out += '(';
  print(out, f);
  if (wrap) out += ')';
}

void print(std::string& out, const Formula& f) {
  switch (f.op()) {
    case Op::True:
      out += "True";
      return;
    case Op::Atom:
      out += 'x';
      out += std::to_string(f.atom().var);
      out += f.atom().rel == Relation::GreaterEq ? " >= " : " <= ";
      print_number(out, f.atom().threshold);
      return;
    case Op::Not:
      out += "not (";
      print(out, f.lhs());
      out += ')';
      return;
    case Op::Eventually:
    case Op::Globally:
      out += f.op() == Op::Eventually ? 'F' : 'G';
      print_interval(out, f.interval());
      out += '(';
      print(out, f.lhs());
      out += ')';
      return;
    case Op::And:
    case Op::Or:
      print_operand(out, f.lhs());
      out += f.op() == Op::And ? " and " : " or ";
      print_operand(out, f.rhs());
      return;
    case Op::Until:
      print_operand(out, f.lhs());
      out += " U";
      print_interval(out, f.interval());
      out += ' ';
      print_operand(out, f.rhs());
      return;
  }
}

}  // namespace

std::string to_string(const Formula& f) {
  std::string out;
  print(out, f);
  return out;
}

}  // namespace stelle
