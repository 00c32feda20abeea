#pragma once

#include "stelle/formula.hpp"
#include "stelle/trajectory.hpp"

#include <span>
#include <string>
#include <vector>

namespace stelle {

/// Ordered log of the rewrite rules that fired.
struct RewriteTrace {
  struct Step {
    std::string rule;
    std::string before;
    std::string after;
  };
  std::vector<Step> steps;

  void note(std::string rule, const Formula& before, const Formula& after);
  std::string text() const;
};

/// Structural simplification to a fixpoint: double negation, negated atoms, De Morgan and
/// negated F/G (only where pushing the negation inward does not grow the formula),
/// idempotence, absorption, G/G and F/F nesting, and phi U phi.
/// node_count(result) <= node_count(f).
Formula simplify_logical(const Formula& f, RewriteTrace* trace = nullptr);

/// Minimal-size negation of an already simplified formula.
Formula negate(const Formula& f, RewriteTrace* trace = nullptr);

/// Constant folding for True / False (not True) subformulas.
Formula fold_constants(const Formula& f, RewriteTrace* trace = nullptr);

enum class AtomStatus { AlwaysTrue, AlwaysFalse, Undefined };

/// Satisfaction status of every atom of a formula, per time step, across a trajectory set.
class TruthMap {
 public:
  TruthMap(const Formula& f, std::span<const Trajectory> taus);

  AtomStatus at(const Atom& a, int t) const;
  /// AlwaysTrue / AlwaysFalse only when the atom is decided the same way at every step.
  AtomStatus overall(const Atom& a) const;
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    Atom atom;
    std::vector<AtomStatus> steps;
    AtomStatus overall = AtomStatus::Undefined;
  };
  const Entry* find(const Atom& a) const;
  std::vector<Entry> entries_;
};

/// Replace every atom decided uniformly by `map` with True / False.
Formula substitute_decided_atoms(const Formula& f, const TruthMap& map);

struct DataAwareOptions {
  /// Fraction of `target_class` trajectories whose satisfaction may change.
  double tolerance = 0.0;
  int target_class = -1;
  /// Trajectory that must keep satisfying the formula (robustness >= 0).
  const Trajectory* must_hold = nullptr;
};

/// Data-relative simplification: decided atoms become constants, constants fold, and subformulas
/// (conjuncts first, the last ones tried first) are pruned while satisfaction at t = 0 over `taus` is preserved.
/// node_count(result) <= node_count(f).
Formula simplify_data_aware(const Formula& f, std::span<const Trajectory> taus, const DataAwareOptions& opts = {},
                            RewriteTrace* trace = nullptr);

/// Logical fixpoint, data-aware simplification, then one more logical pass.
Formula simplify(const Formula& f, std::span<const Trajectory> taus, const DataAwareOptions& opts = {},
                 RewriteTrace* trace = nullptr);

/// Shift thresholds so that, for negation-free f, rho(result) = rho(f) - delta everywhere.
/// Atoms under an odd number of negations are shifted the other way, so the identity holds for
/// any formula whose True constants do not decide the result.
Formula shift_thresholds(const Formula& f, double delta);

/// Robustness-separation postprocessing. For each formula: orient it so most opposing robustness lies
/// below the target's, move the boundary to the midpoint between the target and the closest opposer
/// below it, and negate if the target ends up unsatisfied. `pool` holds labelled reference trajectories;
/// every one whose label differs from `target_class` is an opposer.
std::vector<Formula> postprocess_separation(std::span<const Formula> phis, const Trajectory& target, int target_class,
                                            std::span<const Trajectory> pool);

/// Single-formula form of postprocess_separation with precomputed robustness values.
Formula separate(const Formula& phi, double target_rho, std::span<const double> opposing_rho,
                 const Trajectory& target);

}  // namespace stelle
