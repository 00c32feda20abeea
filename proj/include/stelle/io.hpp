#pragma once

#include "stelle/model.hpp"
#include "stelle/trajectory.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stelle {

struct Dataset {
  std::vector<Trajectory> trajectories;
  std::vector<std::string> channel_names;
  /// class_names[k] is the original label of dense class k.
  std::vector<std::string> class_names;

  int channels() const { return static_cast<int>(channel_names.size()); }
  int length() const { return trajectories.empty() ? 0 : trajectories.front().length(); }
  int classes() const { return static_cast<int>(class_names.size()); }
  std::vector<int> labels() const;
};

/// CSV with one row per (trajectory, channel): id,label,channel,v0,...,v{L-1}. A header row whose
/// first cell is "id" is skipped. Labels are remapped densely, numerically sorted when every label is a
/// number and lexicographically otherwise; an empty label cell means unlabelled. Channels follow the
/// same ordering rule; trajectories keep their first-appearance order.
Dataset load_dataset(std::istream& is);
Dataset load_dataset(const std::string& path);

/// Relabel `ds` with an existing class map; unknown labels are an error.
void remap_labels(Dataset& ds, const std::vector<std::string>& class_names);

void save_dataset(std::ostream& os, const Dataset& ds);
void save_dataset(const std::string& path, const Dataset& ds);

struct PreprocessStats {
  VecX mean;  // per input channel
  VecX std;
  std::vector<int> kept;  // input channels that survive the correlation filter, ascending
  std::vector<std::string> channel_names;
  std::vector<std::string> warnings;
};

struct PreprocessConfig {
  double correlation_threshold = 0.9;
  double std_floor = 1e-8;
};

/// Fit z-scoring and the correlation filter on `train`.
PreprocessStats fit_preprocess(const Dataset& train, const PreprocessConfig& cfg = {});
/// Standardise with `stats` and keep only `stats.kept` channels.
Dataset apply_preprocess(const Dataset& ds, const PreprocessStats& stats);

struct SavedModel {
  ModelState state;
  PreprocessStats preprocess;
  std::vector<std::string> class_names;
};

void save_model(std::ostream& os, const SavedModel& m);
void save_model(const std::string& path, const SavedModel& m);
/// Loads and prepares the state.
SavedModel load_model(std::istream& is);
SavedModel load_model(const std::string& path);

struct SyntheticConfig {
  int per_class = 50;
  int length = 100;
  double noise_std = 0.3;
  double pulse_height = 3.0;
  int window_lo = 30;
  int window_hi = 40;
  /// Give class 0 a pulse too, placed well after the window.
  bool decoy = false;
  std::uint64_t seed = 0;
};

/// Two classes, two channels of Gaussian noise clipped to [-1, 1]. Class 1 carries a pulse of height
/// `pulse_height` on x0 inside [window_lo, window_hi].
Dataset make_synthetic(const SyntheticConfig& cfg);

}  // namespace stelle
