#pragma once

#include "stelle/fwd.hpp"

#include <optional>
#include <string>
#include <vector>

namespace stelle {

/// Uniformly sampled multivariate signal: one row per channel, one column per time step.
struct Trajectory {
  MatX values;
  std::optional<int> label;
  std::string id;

  int channels() const { return static_cast<int>(values.rows()); }
  int length() const { return static_cast<int>(values.cols()); }
};

using TrajectorySet = std::vector<Trajectory>;

}  // namespace stelle
