#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <set>
#include <string>

namespace stelle {

/// Inclusive range of integer time steps [lo, hi].
struct Interval {
  int lo = 0;
  int hi = 0;

  /// Marker used by PSTL templates for a free interval parameter.
  static constexpr Interval placeholder() { return {-1, -1}; }
  constexpr bool is_placeholder() const { return lo < 0; }

  friend constexpr bool operator==(Interval, Interval) = default;
};

enum class Relation : std::uint8_t { GreaterEq, LessEq };

/// Affine predicate x_var >= threshold or x_var <= threshold.
struct Atom {
  int var = 0;
  Relation rel = Relation::GreaterEq;
  double threshold = 0.0;

  static constexpr double placeholder_threshold() { return std::numeric_limits<double>::quiet_NaN(); }
  bool has_placeholder() const { return std::isnan(threshold); }

  friend bool operator==(const Atom& a, const Atom& b) {
    if (a.var != b.var || a.rel != b.rel) return false;
    if (a.has_placeholder() || b.has_placeholder()) return a.has_placeholder() && b.has_placeholder();
    return a.threshold == b.threshold;
  }
};

enum class Op : std::uint8_t { True, Atom, Not, And, Or, Eventually, Globally, Until };

struct FormulaNode;

/// Immutable STL abstract syntax tree. Copies share structure.
class Formula {
 public:
  Formula();  // True

  static Formula truth();
  static Formula falsity();  // not True
  static Formula atom(int var, Relation rel, double threshold);
  static Formula atom(const Atom& a);
  static Formula negation(Formula f);
  static Formula conjunction(Formula a, Formula b);
  static Formula disjunction(Formula a, Formula b);
  static Formula eventually(Interval i, Formula f);
  static Formula globally(Interval i, Formula f);
  static Formula until(Interval i, Formula lhs, Formula rhs);

  Op op() const;
  const Atom& atom() const;
  Interval interval() const;
  /// First operand (only operand of unary nodes).
  Formula lhs() const;
  /// Second operand of And, Or, Until.
  Formula rhs() const;

  int arity() const;
  bool is_true() const { return op() == Op::True; }
  bool is_false() const;

  int node_count() const;
  int horizon() const;
  std::size_t hash() const;

  /// Rebuild this node with different children (same op, atom and interval).
  Formula with_children(const Formula& a, const Formula& b) const;
  Formula with_child(const Formula& a) const { return with_children(a, a); }

  friend bool operator==(const Formula& a, const Formula& b);
  friend bool operator!=(const Formula& a, const Formula& b) { return !(a == b); }

  /// Deterministic structural order (used for tie-breaking).
  friend bool structural_less(const Formula& a, const Formula& b);

 private:
  explicit Formula(std::shared_ptr<const FormulaNode> n) : node_(std::move(n)) {}
  static Formula make(Op op, Atom atom, Interval iv, const Formula* a, const Formula* b);

  std::shared_ptr<const FormulaNode> node_;
};

struct FormulaNode {
  Op op = Op::True;
  Atom atom{};
  Interval interval{};
  std::shared_ptr<const FormulaNode> children[2];
  int nodes = 1;
  int horizon = 0;
  std::size_t hash = 0;
};

struct FormulaHash {
  std::size_t operator()(const Formula& f) const { return f.hash(); }
};

int node_count(const Formula& f);
std::set<int> variable_set(const Formula& f);
int temporal_horizon(const Formula& f);
bool has_placeholders(const Formula& f);

/// Linearly rescale every interval bound from a trace length of `from_len` to `to_len`.
Formula rescale_time(const Formula& f, int from_len, int to_len);

/// Rewrite every atom's variable index through `map(var)`.
template <typename Fn>
Formula map_variables(const Formula& f, Fn&& map) {
  switch (f.op()) {
    case Op::True:
      return f;
    case Op::Atom: {
      Atom a = f.atom();
      a.var = map(a.var);
      return Formula::atom(a);
    }
    default:
      break;
  }
  if (f.arity() == 1) return f.with_child(map_variables(f.lhs(), map));
  return f.with_children(map_variables(f.lhs(), map), map_variables(f.rhs(), map));
}

/// Canonical concrete syntax; parse(to_string(f)) == f.
std::string to_string(const Formula& f);

}  // namespace stelle
