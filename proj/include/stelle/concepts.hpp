#pragma once

#include "stelle/formula.hpp"
#include "stelle/trajectory.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace stelle {

struct TemplateConfig {
  int max_nodes = 5;
  int vars_per_formula = 1;
  /// Generate generic formulas over placeholder variable x0 and copy them to every channel.
  bool duplicate_across_variables = true;
  int channels = 1;

  void validate() const;
};

/// Every PSTL template with 1..max_nodes nodes, grown from atoms by unary (not, F, G)
/// and binary (and, or, U) expansion over all node-count splits.
std::vector<Formula> enumerate_templates(const TemplateConfig& cfg);

/// Parameter values used to instantiate templates.
struct ParameterGrid {
  /// Candidate thresholds per variable index; a single entry is shared by every variable.
  std::vector<std::vector<double>> thresholds;
  std::vector<Interval> intervals;

  std::span<const double> thresholds_for(int var) const;
};

/// Cartesian instantiation of every free threshold and interval of `tmpl`.
std::vector<Formula> instantiate(const Formula& tmpl, std::span<const double> thresholds,
                                 std::span<const Interval> intervals);
std::vector<Formula> instantiate(const Formula& tmpl, const ParameterGrid& grid);

/// Threshold grid: the 10%..90% deciles of the pooled values of each channel
/// (or of all channels together when `pooled_channels` is set).
ParameterGrid default_grid(std::span<const Trajectory> taus, bool pooled_channels);

/// Interval grid: lo in {0, L/4, L/2}, hi = lo + w for w in {L/10, L/5, L/2}, clamped to [0, L-1].
std::vector<Interval> default_intervals(int length);

/// Source of candidate formulas. An empty batch means the stream is exhausted.
class CandidateStream {
 public:
  virtual ~CandidateStream() = default;
  virtual std::vector<Formula> next_batch(std::size_t n) = 0;
};

class VectorCandidateStream final : public CandidateStream {
 public:
  explicit VectorCandidateStream(std::vector<Formula> formulas) : formulas_(std::move(formulas)) {}
  std::vector<Formula> next_batch(std::size_t n) override;

 private:
  std::vector<Formula> formulas_;
  std::size_t pos_ = 0;
};

/// Random instantiations of templates: a node-count tier is drawn uniformly, then a template of that
/// tier, then every placeholder from the grid. Structural duplicates and formulas whose temporal
/// horizon exceeds `max_horizon` are skipped. Stops after `max_draws` draws.
class SampledCandidateStream final : public CandidateStream {
 public:
  SampledCandidateStream(std::vector<Formula> templates, ParameterGrid grid, int max_horizon, std::uint64_t seed,
                         std::size_t max_draws);
  std::vector<Formula> next_batch(std::size_t n) override;
  std::size_t draws() const { return draws_; }

 private:
  std::vector<std::vector<Formula>> tiers_;
  ParameterGrid grid_;
  int max_horizon_;
  std::uint64_t seed_;
  std::size_t max_draws_;
  std::size_t draws_ = 0;
  std::unordered_set<Formula, FormulaHash> seen_;
};

struct SelectionConfig {
  double similarity_threshold = 0.99;
  int per_variable_count = 500;
  int min_total = 1000;
  int batch_size = 256;
  int max_signature_trajectories = 500;
  std::uint64_t seed = 0;

  void validate() const;
  /// Number of concepts to select for a dataset with `channels` channels.
  int target(int channels) const;
};

struct ConceptSet {
  std::vector<Formula> formulas;
  int source_length = 1;

  std::size_t size() const { return formulas.size(); }
};

struct SelectionResult {
  ConceptSet concepts;
  /// The stream ran dry before the target count was reached.
  bool exhausted = false;
  std::size_t candidates_seen = 0;
};

/// Cosine similarity of every row of `a` against every row of `b`; zero rows are similar to nothing.
MatX cosine_similarity(const MatX& a, const MatX& b);

/// Incremental diversity selection. Each batch is ordered by node count (stable), then a candidate is
/// kept iff its signature has cosine similarity < threshold with every kept signature so far.
/// `signature_of` maps a batch to its signature matrix (one row per formula).
using SignatureFn = std::function<MatX(std::span<const Formula>)>;
SelectionResult select_diverse(CandidateStream& stream, double threshold, std::size_t target, std::size_t batch_size,
                               const SignatureFn& signature_of);

/// Full selection over a trajectory set. With `duplicate` the stream yields generic x0 formulas,
/// signatures span every channel, and the returned set is duplicated across channels.
SelectionResult select_concepts(CandidateStream& stream, std::span<const Trajectory> taus, const SelectionConfig& sel,
                                bool duplicate);

/// Copy single-variable generic formulas to every channel 0..d-1 (formula-major order).
std::vector<Formula> duplicate_across_variables(std::span<const Formula> generic, int d);

struct ConceptGenConfig {
  TemplateConfig templates{};
  SelectionConfig selection{};
  /// Candidate draws allowed per requested concept before giving up.
  std::size_t draws_per_concept = 200;
};

/// Templates, grids, candidate stream and selection composed for a training set.
SelectionResult generate_concepts(std::span<const Trajectory> train, const ConceptGenConfig& cfg);

void save_concepts(std::ostream& os, const ConceptSet& cs);
ConceptSet load_concepts(std::istream& is);
void save_concepts(const std::string& path, const ConceptSet& cs);
ConceptSet load_concepts(const std::string& path);

/// Concepts with every interval rescaled from `source_length` to `length`.
ConceptSet rescale_concepts(const ConceptSet& cs, int length);

}  // namespace stelle
