#pragma once

#include "stelle/trajectory.hpp"

#include <cstdint>
#include <vector>

namespace stelle {

/// Base measure over piecewise-linear trajectories with few monotonicity changes.
struct Mu0Params {
  int a = 0;
  int b = 100;
  int delta = 1;
  double start_mean = 0.0;      // m'
  double variation_mean = 0.0;  // m''
  double start_std = 1.0;       // sigma'
  double variation_std = 1.0;   // sigma''
  double flip_probability = 0.1;
  std::uint64_t seed = 0;

  int steps() const { return (b - a) / delta; }
  int length() const { return steps() + 1; }
  void validate() const;
};

/// One channel of a sample, along with the total variation K it was drawn with.
struct Mu0Channel {
  VecX values;
  double total_variation = 0.0;
  int sign_flips = 0;
};

/// Draw channel `channel` of sample `index`; pure in (params, index, channel).
Mu0Channel sample_mu0_channel(const Mu0Params& p, std::uint64_t index, int channel);

/// `count` trajectories with `channels` independently sampled channels each.
std::vector<Trajectory> sample_mu0(const Mu0Params& p, int count, int channels);

}  // namespace stelle
