#include "stelle/mu0.hpp"

#include "stelle/parallel.hpp"
#include "stelle/rng.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace stelle {

void Mu0Params::validate() const {
  if (b <= a) throw std::invalid_argument("mu0: requires b > a");
  if (delta <= 0 || (b - a) % delta != 0) throw std::invalid_argument("mu0: delta must divide b - a");
  if (!(start_std > 0.0) || !(variation_std > 0.0)) throw std::invalid_argument("mu0: standard deviations must be > 0");
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0))
    throw std::invalid_argument("mu0: flip probability must lie in [0, 1]");
}

Mu0Channel sample_mu0_channel(const Mu0Params& p, std::uint64_t index, int channel) {
  Rng rng(substream_seed(p.seed, index * 0x10001ULL + static_cast<std::uint64_t>(channel)));
  const int n = p.steps();
  Mu0Channel out;
  out.values.resize(n + 1);
  out.values[0] = rng.normal(p.start_mean, p.start_std);
  const double k = std::pow(rng.normal(p.variation_mean, p.variation_std), 2);
  out.total_variation = k;

  std::vector<double> y(static_cast<std::size_t>(n) + 1);
  y[0] = 0.0;
  y[static_cast<std::size_t>(n)] = k;
  for (int i = 1; i < n; ++i) y[static_cast<std::size_t>(i)] = rng.uniform(0.0, k);
  std::sort(y.begin() + 1, y.begin() + n);

  double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  for (int i = 0; i < n; ++i) {
    if (rng.bernoulli(p.flip_probability)) {
      sign = -sign;
      ++out.sign_flips;
    }
    out.values[i + 1] = out.values[i] + sign * (y[static_cast<std::size_t>(i) + 1] - y[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::vector<Trajectory> sample_mu0(const Mu0Params& p, int count, int channels) {
  p.validate();
  if (count < 1 || channels < 1) throw std::invalid_argument("mu0: count and channels must be >= 1");
  std::vector<Trajectory> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), [&](std::size_t i) {
    Trajectory& tr = out[i];
    tr.values.resize(channels, p.length());
    for (int c = 0; c < channels; ++c) tr.values.row(c) = sample_mu0_channel(p, i, c).values.transpose();
    tr.id = "mu0_" + std::to_string(i);
  });
  return out;
}

}  // namespace stelle
