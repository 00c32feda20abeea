#pragma once

#include "stelle/model.hpp"
#include "stelle/rewrite.hpp"

#include <optional>
#include <span>
#include <vector>

namespace stelle {

struct ExplainConfig {
  /// Fixed number of concepts per local explanation; when unset the cumulative cut-off applies.
  std::optional<int> budget;
  double cumulative = 0.8;
  /// Fraction of target-class trajectories whose satisfaction simplification may change.
  double simplification_slack = 0.0;
  /// Coverage level of the global set cover; 0 selects greedy separability search.
  double coverage = 0.0;
  int ig_steps = 64;

  void validate() const;
};

struct AttributionMatrix {
  MatX values;  // min-max normalised to [0, 1]
  MatX raw;
  int target_class = 0;
};

/// F_k(z) = softmax(MLP(flatten(softsign(z))))[k] in inference mode.
double head_probability(const ModelState& state, const MatX& z, int k);
/// Gradient of head_probability with respect to z.
MatX head_gradient(const ModelState& state, const MatX& z, int k);

/// Integrated gradients from the zero baseline with a midpoint Riemann sum of `steps` terms.
AttributionMatrix integrated_gradients(const ModelState& state, const MatX& z, int k, int steps);

/// Min-max normalisation to [0, 1]; a constant matrix maps to 0.5 everywhere.
MatX normalise_minmax(const MatX& m);

/// r = |A(:, k) - mean of the other columns|.
VecX relevance(const MatX& A, int k);

struct LocalSelection {
  std::vector<int> indices;
  /// r was all zero; the single index 0 is returned.
  bool degenerate = false;
};

/// Budget mode: the `budget` largest entries. Cumulative mode: the shortest prefix of the descending order
/// whose sum reaches `cumulative` of the total. Ties go to the lower index.
LocalSelection select_concepts_local(const VecX& r, const ExplainConfig& cfg);

struct SelectedConcept {
  int index = 0;
  Formula formula;
  double relevance = 0.0;
};

struct LocalExplanation {
  int target_class = 0;
  std::vector<SelectedConcept> selected;
  /// Selected concepts after the robustness-separation refinement.
  std::vector<Formula> refined;
  /// Conjunction of the refined formulas, before simplification.
  Formula conjunction;
  Formula postprocessed;
  bool degenerate = false;
  RewriteTrace trace;

  /// Conjunction of the raw selected concepts.
  Formula raw_conjunction() const;
};

LocalExplanation explain_local(const ModelState& state, const Trajectory& tau, int target_class,
                               const ExplainConfig& cfg);
LocalExplanation explain_local(const ModelState& state, const Features& feats, const Trajectory& tau,
                               int target_class, const ExplainConfig& cfg);

using BoolMat = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// D(i, j) = 1 iff rho(phi_j, x_i) lies strictly outside [min, max] of rho(phi_j, .) over `others`.
/// `class_rho` is |class k| x |formulas|, `other_rho` is |others| x |formulas|.
BoolMat division_matrix(const MatX& class_rho, const MatX& other_rho);
BoolMat division_matrix(std::span<const Formula> formulas, std::span<const Trajectory> class_k,
                        std::span<const Trajectory> others);

struct CoverResult {
  std::vector<int> selected;  // ascending column indices
  double cost = 0.0;
  int uncovered = 0;          // rows no column can cover
  bool exact = false;
};

/// Minimum-cost cover of every coverable row by branch and bound.
CoverResult set_cover_exact(const BoolMat& D, std::span<const double> costs);
/// Repeatedly pick the column with the most newly covered rows per unit cost.
CoverResult set_cover_greedy(const BoolMat& D, std::span<const double> costs);

/// Satisfaction of every candidate on every reference trajectory, for separability-driven selection.
struct SeparabilityData {
  BoolMat sat;                 // trajectories x candidates
  std::vector<char> positive;  // trajectory belongs to the explained class
};

/// Greedily grow a disjunction that maximises (TP + TN) / total on the reference data; stops when no
/// candidate improves it. Ties prefer the lower cost, then the lower index.
CoverResult separability_cover(const SeparabilityData& data, std::span<const double> costs);

/// coverage > 0: exact cover for at most 20 columns, greedy beyond. coverage == 0: separability_cover.
CoverResult global_cover(const BoolMat& D, std::span<const double> costs, double coverage,
                         const SeparabilityData* data = nullptr);

struct GlobalExplanation {
  int class_index = 0;
  std::vector<Formula> candidates;
  std::vector<Formula> disjuncts;
  Formula disjunction;
  Formula postprocessed;
  bool empty_cover = false;
  int uncovered = 0;
};

/// Class-level explanation from the local explanations of the class's training trajectories.
GlobalExplanation explain_global(const ModelState& state, std::span<const Trajectory> train, int k,
                                 const ExplainConfig& cfg);

}  // namespace stelle
