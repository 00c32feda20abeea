#include "stelle/rewrite.hpp"

#include "stelle/robustness.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace stelle {

void RewriteTrace::note(std::string rule, const Formula& before, const Formula& after) {
  steps.push_back({std::move(rule), to_string(before), to_string(after)});
}

std::string RewriteTrace::text() const {
  std::ostringstream os;
  for (const auto& s : steps) os << s.rule << ": " << s.before << "  ->  " << s.after << '\n';
  return os.str();
}

namespace {

bool mergeable(Interval a, Interval b) { return !a.is_placeholder() && !b.is_placeholder(); }

Atom flipped(const Atom& a) {
  Atom b = a;
  b.rel = a.rel == Relation::GreaterEq ? Relation::LessEq : Relation::GreaterEq;
  return b;
}

class Logical {
 public:
  explicit Logical(RewriteTrace* trace) : trace_(trace) {}

  Formula run(const Formula& f) {
    Formula cur = f;
    for (int iter = 0; iter < 32; ++iter) {
      Formula next = pass(cur);
      if (next == cur) break;
      cur = next;
    }
    return cur;
  }

  Formula pass(const Formula& f) {
    switch (f.op()) {
      case Op::True:
      case Op::Atom:
        return f;
      case Op::Not:
        return neg(pass(f.lhs()));
      case Op::And:
        return mk_and(pass(f.lhs()), pass(f.rhs()));
      case Op::Or:
        return mk_or(pass(f.lhs()), pass(f.rhs()));
      case Op::Eventually:
        return mk_temporal(Op::Eventually, f.interval(), pass(f.lhs()));
      case Op::Globally:
        return mk_temporal(Op::Globally, f.interval(), pass(f.lhs()));
      case Op::Until:
        return mk_until(f.interval(), pass(f.lhs()), pass(f.rhs()));
    }
    return f;
  }

  // Smallest available form of not(g), g already simplified.
  Formula neg(const Formula& g) {
    const Formula wrapped = Formula::negation(g);
    switch (g.op()) {
      case Op::True:
        return wrapped;
      case Op::Not:
        return note("double negation", wrapped, g.lhs());
      case Op::Atom:
        return note("negated atom", wrapped, Formula::atom(flipped(g.atom())));
      case Op::Until:
        return wrapped;
      default:
        break;
    }
    // Try pushing the negation inward; keep it only if it is no larger than the wrapped form.
    RewriteTrace local;
    RewriteTrace* saved = trace_;
    trace_ = saved ? &local : nullptr;
    Formula pushed;
    const char* rule = "";
    switch (g.op()) {
      case Op::And:
        pushed = mk_or(neg(g.lhs()), neg(g.rhs()));
        rule = "De Morgan (and)";
        break;
      case Op::Or:
        pushed = mk_and(neg(g.lhs()), neg(g.rhs()));
        rule = "De Morgan (or)";
        break;
      case Op::Eventually:
        pushed = mk_temporal(Op::Globally, g.interval(), neg(g.lhs()));
        rule = "negated eventually";
        break;
      default:
        pushed = mk_temporal(Op::Eventually, g.interval(), neg(g.lhs()));
        rule = "negated globally";
        break;
    }
    trace_ = saved;
    if (pushed.node_count() > wrapped.node_count()) return wrapped;
    if (trace_) {
      trace_->note(rule, wrapped, pushed);
      trace_->steps.insert(trace_->steps.end(), local.steps.begin(), local.steps.end());
    }
    return pushed;
  }

  Formula mk_and(const Formula& a, const Formula& b) { return mk_binary(Op::And, a, b); }
  Formula mk_or(const Formula& a, const Formula& b) { return mk_binary(Op::Or, a, b); }

  Formula mk_binary(Op op, const Formula& a, const Formula& b) {
    const Op dual = op == Op::And ? Op::Or : Op::And;
    const Formula built = op == Op::And ? Formula::conjunction(a, b) : Formula::disjunction(a, b);
    if (a == b) return note("idempotence", built, a);
    // phi and (phi or psi) -> phi
    if (b.op() == dual && (b.lhs() == a || b.rhs() == a)) return note("absorption", built, a);
    if (a.op() == dual && (a.lhs() == b || a.rhs() == b)) return note("absorption", built, b);
    // phi and (phi and psi) -> phi and psi
    if (b.op() == op && (b.lhs() == a || b.rhs() == a)) return note("idempotence (nested)", built, b);
    if (a.op() == op && (a.lhs() == b || a.rhs() == b)) return note("idempotence (nested)", built, a);
    return built;
  }

  Formula mk_temporal(Op op, Interval iv, const Formula& x) {
    const Formula built = op == Op::Eventually ? Formula::eventually(iv, x) : Formula::globally(iv, x);
    if (x.op() == op && mergeable(iv, x.interval())) {
      const Interval sum{iv.lo + x.interval().lo, iv.hi + x.interval().hi};
      const Formula merged = op == Op::Eventually ? Formula::eventually(sum, x.lhs()) : Formula::globally(sum, x.lhs());
      return note(op == Op::Eventually ? "eventually nesting" : "globally nesting", built, merged);
    }
    return built;
  }

  Formula mk_until(Interval iv, const Formula& a, const Formula& b) {
    const Formula built = Formula::until(iv, a, b);
    if (a == b && !iv.is_placeholder()) {
      // phi U[0,b] phi is phi; with lo > 0 every witness must keep phi on [t, t+lo]
      if (iv.lo == 0) return note("until of equal operands", built, a);
      return note("until of equal operands", built, mk_temporal(Op::Globally, {0, iv.lo}, a));
    }
    return built;
  }

 private:
  Formula note(const char* rule, const Formula& before, const Formula& after) {
    if (trace_) trace_->note(rule, before, after);
    return after;
  }

  RewriteTrace* trace_;
};

}  // namespace

Formula simplify_logical(const Formula& f, RewriteTrace* trace) { return Logical(trace).run(f); }

Formula negate(const Formula& f, RewriteTrace* trace) { return Logical(trace).neg(f); }

Formula fold_constants(const Formula& f, RewriteTrace* trace) {
  auto note = [&](const char* rule, const Formula& before, const Formula& after) {
    if (trace) trace->note(rule, before, after);
    return after;
  };
  switch (f.op()) {
    case Op::True:
    case Op::Atom:
      return f;
    case Op::Not: {
      const Formula c = fold_constants(f.lhs(), trace);
      if (c.is_false()) return note("not False", f, Formula::truth());
      return Formula::negation(c);
    }
    case Op::And:
    case Op::Or: {
      const Formula a = fold_constants(f.lhs(), trace);
      const Formula b = fold_constants(f.rhs(), trace);
      const Formula built = f.with_children(a, b);
      const bool is_and = f.op() == Op::And;
      // the absorbing constant wins, the neutral one vanishes
      const auto absorbing = [&](const Formula& x) { return is_and ? x.is_false() : x.is_true(); };
      const auto neutral = [&](const Formula& x) { return is_and ? x.is_true() : x.is_false(); };
      if (absorbing(a)) return note(is_and ? "False and phi" : "True or phi", built, a);
      if (absorbing(b)) return note(is_and ? "False and phi" : "True or phi", built, b);
      if (neutral(a)) return note(is_and ? "True and phi" : "False or phi", built, b);
      if (neutral(b)) return note(is_and ? "True and phi" : "False or phi", built, a);
      return built;
    }
    case Op::Eventually:
    case Op::Globally: {
      const Formula c = fold_constants(f.lhs(), trace);
      const Formula built = f.with_child(c);
      if (c.is_true() || c.is_false()) return note("temporal constant", built, c);
      return built;
    }
    case Op::Until: {
      const Formula a = fold_constants(f.lhs(), trace);
      const Formula b = fold_constants(f.rhs(), trace);
      const Formula built = f.with_children(a, b);
      const Interval iv = f.interval();
      if (b.is_false()) return note("phi U False", built, b);
      if (a.is_false()) return note("False U phi", built, a);
      if (a.is_true()) return note("True U phi", built, Formula::eventually(iv, b));
      if (b.is_true()) {
        if (iv.lo == 0) return note("phi U[0,b] True", built, a);
        return note("phi U[a,b] True", built, Formula::globally({0, iv.lo}, a));
      }
      return built;
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// truth map

namespace {

void collect_atoms(const Formula& f, std::vector<Atom>& out) {
  if (f.op() == Op::Atom) {
    if (std::find(out.begin(), out.end(), f.atom()) == out.end()) out.push_back(f.atom());
    return;
  }
  if (f.arity() >= 1) collect_atoms(f.lhs(), out);
  if (f.arity() == 2) collect_atoms(f.rhs(), out);
}

}  // namespace

TruthMap::TruthMap(const Formula& f, std::span<const Trajectory> taus) {
  std::vector<Atom> atoms;
  collect_atoms(f, atoms);
  int steps = 0;
  for (const auto& t : taus) steps = std::max(steps, t.length());
  for (const Atom& a : atoms) {
    Entry e{a, std::vector<AtomStatus>(static_cast<std::size_t>(steps), AtomStatus::Undefined), AtomStatus::Undefined};
    if (a.has_placeholder()) {
      entries_.push_back(std::move(e));
      continue;
    }
    bool all_true = !taus.empty();
    bool all_false = !taus.empty();
    for (int t = 0; t < steps; ++t) {
      bool any_true = false, any_false = false;
      for (const auto& tau : taus) {
        if (t >= tau.length()) continue;
        if (a.var >= tau.channels())
          throw std::out_of_range("truth map: atom references channel x" + std::to_string(a.var));
        const double x = tau.values(a.var, t);
        const bool sat = a.rel == Relation::GreaterEq ? x - a.threshold >= 0.0 : a.threshold - x >= 0.0;
        (sat ? any_true : any_false) = true;
      }
      AtomStatus s = AtomStatus::Undefined;
      if (any_true && !any_false) s = AtomStatus::AlwaysTrue;
      if (any_false && !any_true) s = AtomStatus::AlwaysFalse;
      e.steps[static_cast<std::size_t>(t)] = s;
      all_true = all_true && s == AtomStatus::AlwaysTrue;
      all_false = all_false && s == AtomStatus::AlwaysFalse;
    }
    if (all_true) e.overall = AtomStatus::AlwaysTrue;
    if (all_false) e.overall = AtomStatus::AlwaysFalse;
    entries_.push_back(std::move(e));
  }
}

const TruthMap::Entry* TruthMap::find(const Atom& a) const {
  for (const auto& e : entries_)
    if (e.atom == a) return &e;
  return nullptr;
}

AtomStatus TruthMap::at(const Atom& a, int t) const {
  const Entry* e = find(a);
  if (!e || t < 0 || static_cast<std::size_t>(t) >= e->steps.size()) return AtomStatus::Undefined;
  return e->steps[static_cast<std::size_t>(t)];
}

AtomStatus TruthMap::overall(const Atom& a) const {
  const Entry* e = find(a);
  return e ? e->overall : AtomStatus::Undefined;
}

Formula substitute_decided_atoms(const Formula& f, const TruthMap& map) {
  switch (f.op()) {
    case Op::True:
      return f;
    case Op::Atom:
      switch (map.overall(f.atom())) {
        case AtomStatus::AlwaysTrue:
          return Formula::truth();
        case AtomStatus::AlwaysFalse:
          return Formula::falsity();
        default:
          return f;
      }
    default:
      break;
  }
  const Formula a = substitute_decided_atoms(f.lhs(), map);
  return f.arity() == 2 ? f.with_children(a, substitute_decided_atoms(f.rhs(), map)) : f.with_child(a);
}

// ---------------------------------------------------------------------------
// data-aware simplification

namespace {

// Accepts a candidate iff satisfaction at t = 0 matches the original formula within the tolerance.
class SatisfactionGuard {
 public:
  SatisfactionGuard(const Formula& original, std::span<const Trajectory> taus, const DataAwareOptions& opts)
      : taus_(taus), opts_(opts) {
    bits_.reserve(taus.size());
    for (const auto& t : taus) bits_.push_back(satisfied(original, t));
    std::size_t in_class = 0;
    for (const auto& t : taus) in_class += t.label && *t.label == opts.target_class;
    budget_ = static_cast<std::size_t>(std::floor(opts.tolerance * static_cast<double>(in_class) + 1e-12));
  }

  bool accepts(const Formula& cand) const {
    if (opts_.must_hold && robustness(cand, *opts_.must_hold, 0) < 0.0) return false;
    std::size_t changed = 0;
    for (std::size_t j = 0; j < taus_.size(); ++j) {
      if (satisfied(cand, taus_[j]) == bits_[j]) continue;
      if (!admits_change(j, changed)) return false;
    }
    return true;
  }

  bool accepts_bits(const std::vector<char>& bits) const {
    std::size_t changed = 0;
    for (std::size_t j = 0; j < taus_.size(); ++j) {
      if (static_cast<bool>(bits[j]) == bits_[j]) continue;
      if (!admits_change(j, changed)) return false;
    }
    return true;
  }

  std::size_t size() const { return taus_.size(); }

 private:
  bool admits_change(std::size_t j, std::size_t& changed) const {
    const auto& label = taus_[j].label;
    if (!label || *label != opts_.target_class) return false;
    return ++changed <= budget_;
  }

  std::span<const Trajectory> taus_;
  const DataAwareOptions& opts_;
  std::vector<bool> bits_;
  std::size_t budget_ = 0;
};

void flatten_and(const Formula& f, std::vector<Formula>& out) {
  if (f.op() == Op::And) {
    flatten_and(f.lhs(), out);
    flatten_and(f.rhs(), out);
  } else {
    out.push_back(f);
  }
}

Formula fold_and(const std::vector<Formula>& parts) {
  Formula acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = Formula::conjunction(acc, parts[i]);
  return acc;
}

// Drop top-level conjuncts whose removal leaves every satisfaction bit intact.
Formula prune_conjuncts(const Formula& f, std::span<const Trajectory> taus, const SatisfactionGuard& guard,
                        RewriteTrace* trace) {
  std::vector<Formula> parts;
  flatten_and(f, parts);
  if (parts.size() < 2) return f;
  const std::size_t n = parts.size();
  std::vector<std::vector<char>> sat(n, std::vector<char>(taus.size()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < taus.size(); ++j) sat[i][j] = satisfied(parts[i], taus[j]);

  // later conjuncts go first; callers list the most important ones up front
  std::vector<std::size_t> order(n);
  std::iota(order.rbegin(), order.rend(), 0);
  std::vector<bool> keep(n, true);
  std::size_t kept = n;
  std::vector<char> bits(taus.size());
  for (std::size_t i : order) {
    if (kept == 1) break;
    keep[i] = false;
    for (std::size_t j = 0; j < taus.size(); ++j) {
      bool all = true;
      for (std::size_t c = 0; c < n && all; ++c)
        if (keep[c]) all = sat[c][j];
      bits[j] = all;
    }
    if (guard.accepts_bits(bits)) {
      --kept;
    } else {
      keep[i] = true;
    }
  }
  if (kept == n) return f;
  std::vector<Formula> out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(parts[i]);
  Formula result = fold_and(out);
  if (trace) trace->note("redundant conjunct", f, result);
  return result;
}

// Replace the subtree at pre-order position `index`.
Formula replace_at(const Formula& f, int index, const Formula& with) {
  if (index == 0) return with;
  int offset = 1;
  const Formula a = f.lhs();
  if (index < offset + a.node_count()) {
    const Formula na = replace_at(a, index - offset, with);
    return f.arity() == 2 ? f.with_children(na, f.rhs()) : f.with_child(na);
  }
  offset += a.node_count();
  return f.with_children(a, replace_at(f.rhs(), index - offset, with));
}

Formula subtree_at(const Formula& f, int index) {
  if (index == 0) return f;
  const Formula a = f.lhs();
  if (index < 1 + a.node_count()) return subtree_at(a, index - 1);
  return subtree_at(f.rhs(), index - 1 - a.node_count());
}

// Upper bound on subtree replacement attempts; conjunct pruning has already shrunk the formula.
constexpr int kMaxPruneNodes = 400;

}  // namespace

Formula simplify_data_aware(const Formula& f, std::span<const Trajectory> taus, const DataAwareOptions& opts,
                            RewriteTrace* trace) {
  if (taus.empty()) throw std::invalid_argument("data-aware simplification needs trajectories");
  const SatisfactionGuard guard(f, taus, opts);
  Formula cur = prune_conjuncts(f, taus, guard, trace);

  // atoms decided uniformly over the data become constants
  const TruthMap map(cur, taus);
  const Formula substituted = substitute_decided_atoms(cur, map);
  if (substituted != cur) {
    const Formula cand = simplify_logical(fold_constants(substituted));
    if (cand.node_count() <= cur.node_count() && guard.accepts(cand)) {
      if (trace) trace->note("decided atoms", cur, cand);
      cur = cand;
    }
  }

  // subtree pruning, top-down, first accepted replacement restarts the scan
  bool changed = true;
  while (changed && cur.node_count() > 1 && cur.node_count() <= kMaxPruneNodes) {
    changed = false;
    for (int i = 0; i < cur.node_count() && !changed; ++i) {
      const Formula sub = subtree_at(cur, i);
      if (sub.is_true() || sub.is_false()) continue;
      for (const Formula& constant : {Formula::truth(), Formula::falsity()}) {
        const Formula cand = simplify_logical(fold_constants(replace_at(cur, i, constant)));
        if (cand.node_count() >= cur.node_count() || !guard.accepts(cand)) continue;
        if (trace) trace->note(constant.is_true() ? "subformula to True" : "subformula to False", cur, cand);
        cur = cand;
        changed = true;
        break;
      }
    }
  }
  return cur;
}

Formula simplify(const Formula& f, std::span<const Trajectory> taus, const DataAwareOptions& opts,
                 RewriteTrace* trace) {
  const Formula logical = simplify_logical(f, trace);
  const Formula data = taus.empty() ? logical : simplify_data_aware(logical, taus, opts, trace);
  return simplify_logical(data, trace);
}

// ---------------------------------------------------------------------------
// threshold shift and separation

namespace {

Formula shift(const Formula& f, double delta) {
  switch (f.op()) {
    case Op::True:
      return f;
    case Op::Atom: {
      Atom a = f.atom();
      if (a.has_placeholder()) return f;
      // x >= c has rho = x - c, so raising c lowers rho; x <= c is the mirror image
      a.threshold += a.rel == Relation::GreaterEq ? delta : -delta;
      return Formula::atom(a);
    }
    case Op::Not:
      return f.with_child(shift(f.lhs(), -delta));
    default:
      break;
  }
  const Formula a = shift(f.lhs(), delta);
  return f.arity() == 2 ? f.with_children(a, shift(f.rhs(), delta)) : f.with_child(a);
}

}  // namespace

Formula shift_thresholds(const Formula& f, double delta) {
  if (delta == 0.0) return f;
  return shift(f, delta);
}

Formula separate(const Formula& phi, double target_rho, std::span<const double> opposing_rho,
                 const Trajectory& target) {
  if (opposing_rho.empty()) throw std::invalid_argument("separation needs at least one opposing trajectory");
  std::size_t below = 0, above = 0;
  for (double r : opposing_rho) {
    below += r < target_rho;
    above += r > target_rho;
  }
  const bool flip = above > below;
  Formula g = flip ? Formula::negation(phi) : phi;
  const double r = flip ? -target_rho : target_rho;
  bool found = false;
  double closest = 0.0;
  for (double o : opposing_rho) {
    const double v = flip ? -o : o;
    if (v < r && (!found || v > closest)) {
      closest = v;
      found = true;
    }
  }
  const double s = found ? 0.5 * (r + closest) : 0.0;
  Formula out = shift_thresholds(g, s);
  if (robustness(out, target, 0) < 0.0) out = Formula::negation(out);
  return out;
}

std::vector<Formula> postprocess_separation(std::span<const Formula> phis, const Trajectory& target, int target_class,
                                            std::span<const Trajectory> pool) {
  std::vector<Trajectory> opposers;
  for (const auto& t : pool)
    if (t.label && *t.label != target_class) opposers.push_back(t);
  if (opposers.empty()) throw std::invalid_argument("separation needs at least one opposing trajectory");
  std::vector<Formula> out;
  out.reserve(phis.size());
  for (const Formula& phi : phis) {
    const VecX opp = robustness_row(phi, opposers);
    out.push_back(separate(phi, robustness(phi, target, 0),
                           std::span<const double>(opp.data(), static_cast<std::size_t>(opp.size())), target));
  }
  return out;
}

}  // namespace stelle
