#pragma once

#include "stelle/formula.hpp"
#include "stelle/trajectory.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace stelle {

/// Percentage of pool trajectories with a label other than `k` whose satisfaction of `explanation`
/// differs from the target's.
double local_separability(const Formula& explanation, const Trajectory& target, int k,
                          std::span<const Trajectory> pool);

struct Confusion {
  int tp = 0, tn = 0, fp = 0, fn = 0;
  int total() const { return tp + tn + fp + fn; }
};

/// Satisfaction of `explanation` against membership in class `k`, over every labelled trajectory.
Confusion class_confusion(const Formula& explanation, int k, std::span<const Trajectory> trajs);

struct GlobalSeparability {
  std::map<int, double> per_class;  // percentage
  double micro = 0.0;               // percentage
  long total = 0;                   // scored (trajectory, class) pairs
};

/// Sep_k = (TP_k + TN_k) / total and micro = sum(TP + TN) / sum(total).
GlobalSeparability global_separability(const std::map<int, Formula>& expls, std::span<const Trajectory> trajs);

struct PRF {
  double recall = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  /// Some class had no predicted positives; its precision was counted as 0.
  bool precision_degenerate = false;
};

/// Macro average over the classes in `expls`.
PRF global_prf(const std::map<int, Formula>& expls, std::span<const Trajectory> trajs);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
  int n = 0;
};

MeanStd mean_std(std::span<const double> xs);

struct ReadabilityRow {
  MeanStd nodes;
  MeanStd variables;
};

/// Node and distinct-variable statistics grouped by condition tag.
struct ReadabilityReport {
  std::map<std::string, ReadabilityRow> rows;
};

ReadabilityReport readability(std::span<const Formula> formulas, std::span<const std::string> tags);

struct SeparabilityReport {
  MeanStd local_correct;
  MeanStd local_misclassified_predicted;
  MeanStd local_misclassified_true;
  GlobalSeparability global_all;
  GlobalSeparability global_correct;
  GlobalSeparability global_misclassified;
};

std::string format_number(double x);

std::string readability_table(const ReadabilityReport& r);
std::string separability_table(const SeparabilityReport& r);

}  // namespace stelle
