#include "stelle/kernel.hpp"

#include "stelle/parallel.hpp"
#include "stelle/robustness.hpp"

#include <stdexcept>

namespace stelle {

SignatureMatrix signature(std::span<const Formula> formulas, std::span<const Trajectory> taus) {
  SignatureMatrix out;
  out.values = robustness_matrix(formulas, taus).unaryExpr(&clamp_large);
  out.formula_ids.reserve(formulas.size());
  for (const Formula& f : formulas) out.formula_ids.push_back(to_string(f));
  out.trajectory_ids.reserve(taus.size());
  for (const Trajectory& t : taus) out.trajectory_ids.push_back(t.id);
  return out;
}

void KernelConfig::validate() const {
  if (mc_trajectories < 1) throw std::invalid_argument("kernel: mc_trajectories must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("kernel: epsilon must be > 0");
  mu0.validate();
}

std::vector<Trajectory> mc_sample(const KernelConfig& cfg, int channels, int length) {
  cfg.validate();
  if (length < 2) throw std::invalid_argument("kernel: trajectories need at least two steps");
  Mu0Params p = cfg.mu0;
  p.a = 0;
  p.b = length - 1;
  p.delta = 1;
  return sample_mu0(p, cfg.mc_trajectories, channels);
}

namespace {

void check_shape(const Trajectory& tau, const Trajectory& xi) {
  if (tau.channels() != xi.channels() || tau.length() != xi.length())
    throw std::invalid_argument("kernel: trajectory shape does not match the Monte-Carlo sample");
}

}  // namespace

double kernel_formula_formula(const Formula& phi, const Formula& psi, std::span<const Trajectory> sample) {
  if (sample.empty()) throw std::invalid_argument("kernel: empty sample");
  const ArrX a = robustness_row(phi, sample).unaryExpr(&clamp_large).array();
  const ArrX b = robustness_row(psi, sample).unaryExpr(&clamp_large).array();
  return (a * b).sum() / static_cast<double>(sample.size());
}

double kernel_trajectory_formula(const Trajectory& tau, const Formula& phi, std::span<const Trajectory> sample,
                                 double epsilon) {
  if (sample.empty()) throw std::invalid_argument("kernel: empty sample");
  double acc = 0.0;
  for (const Trajectory& xi : sample) {
    check_shape(tau, xi);
    const double d = (xi.values - tau.values).squaredNorm();
    acc += d / epsilon * clamp_large(robustness(phi, xi, 0));
  }
  return acc / static_cast<double>(sample.size());
}

VecX embed_trajectory(const Trajectory& tau, std::span<const Formula> concepts, std::span<const Trajectory> sample,
                      double epsilon) {
  if (concepts.empty()) throw std::invalid_argument("kernel: empty concept set");
  if (sample.empty()) throw std::invalid_argument("kernel: empty sample");
  VecX dist(static_cast<Eigen::Index>(sample.size()));
  for (std::size_t m = 0; m < sample.size(); ++m) {
    check_shape(tau, sample[m]);
    dist[static_cast<Eigen::Index>(m)] = (sample[m].values - tau.values).squaredNorm() / epsilon;
  }
  const MatX rho = robustness_matrix(concepts, sample).unaryExpr(&clamp_large);
  return rho * dist / static_cast<double>(sample.size());
}

KernelEmbedder::KernelEmbedder(std::span<const Formula> concepts, std::span<const Trajectory> sample) {
  if (concepts.empty()) throw std::invalid_argument("kernel: empty concept set");
  if (sample.empty()) throw std::invalid_argument("kernel: empty sample");
  sample_size_ = static_cast<int>(sample.size());
  channels_ = sample.front().channels();
  length_ = sample.front().length();
  const Eigen::Index dim = static_cast<Eigen::Index>(channels_) * length_;

  rho_ = robustness_matrix(concepts, sample).unaryExpr(&clamp_large);
  MatX xi(sample_size_, dim);
  VecX sq(sample_size_);
  for (int m = 0; m < sample_size_; ++m) {
    const Trajectory& s = sample[static_cast<std::size_t>(m)];
    if (s.channels() != channels_ || s.length() != length_)
      throw std::invalid_argument("kernel: inconsistent Monte-Carlo sample shapes");
    xi.row(m) = s.values.reshaped().transpose();
    sq[m] = s.values.squaredNorm();
  }
  sq_norm_weight_ = rho_ * sq;
  cross_ = rho_ * xi;
  rho_sum_ = rho_.rowwise().sum();
}

VecX KernelEmbedder::unscaled(const Trajectory& tau) const {
  if (tau.channels() != channels_ || tau.length() != length_)
    throw std::invalid_argument("kernel: trajectory shape does not match the Monte-Carlo sample");
  const VecX flat = tau.values.reshaped();
  return (sq_norm_weight_ - 2.0 * (cross_ * flat) + tau.values.squaredNorm() * rho_sum_) /
         static_cast<double>(sample_size_);
}

}  // namespace stelle
