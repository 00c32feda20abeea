#pragma once

#include "stelle/formula.hpp"
#include "stelle/mu0.hpp"
#include "stelle/trajectory.hpp"

#include <span>
#include <string>
#include <vector>

namespace stelle {

/// Robustness signatures: values(i, j) = rho(formula_i, trajectory_j, 0).
struct SignatureMatrix {
  MatX values;
  std::vector<std::string> formula_ids;
  std::vector<std::string> trajectory_ids;
};

SignatureMatrix signature(std::span<const Formula> formulas, std::span<const Trajectory> taus);

struct KernelConfig {
  int mc_trajectories = 512;
  Mu0Params mu0{};
  double epsilon = 1.0;

  void validate() const;
};

/// Monte-Carlo sample from mu0 aligned with a dataset: `length` steps and `channels` channels.
std::vector<Trajectory> mc_sample(const KernelConfig& cfg, int channels, int length);

/// (1/M) sum_xi rho(phi, xi) rho(psi, xi) over a shared sample.
double kernel_formula_formula(const Formula& phi, const Formula& psi, std::span<const Trajectory> sample);

/// (1/M) sum_xi (||xi - tau||^2 / epsilon) rho(phi, xi) over a shared sample.
double kernel_trajectory_formula(const Trajectory& tau, const Formula& phi, std::span<const Trajectory> sample,
                                 double epsilon);

/// Kernel embedding of `tau` against every concept, one shared sample.
VecX embed_trajectory(const Trajectory& tau, std::span<const Formula> concepts, std::span<const Trajectory> sample,
                      double epsilon);

/// Cached form of the trajectory-formula kernel for a fixed concept list and sample.
///
/// Expanding ||xi - tau||^2 = ||xi||^2 - 2<xi, tau> + ||tau||^2 gives
///   k(tau, phi_i) = (a_i - 2 (B tau)_i + ||tau||^2 c_i) / (M epsilon)
/// with a_i = sum_m rho_im ||xi_m||^2, B = R Xi, c_i = sum_m rho_im.
class KernelEmbedder {
 public:
  KernelEmbedder() = default;
  KernelEmbedder(std::span<const Formula> concepts, std::span<const Trajectory> sample);

  /// Embedding at epsilon = 1; the kernel is linear in 1/epsilon.
  VecX unscaled(const Trajectory& tau) const;
  VecX embed(const Trajectory& tau, double epsilon) const { return unscaled(tau) / epsilon; }

  int concepts() const { return static_cast<int>(sq_norm_weight_.size()); }
  int sample_size() const { return sample_size_; }
  /// Clamped robustness of every concept on every sample trajectory (concepts x M).
  const MatX& sample_robustness() const { return rho_; }

 private:
  MatX rho_;
  VecX sq_norm_weight_;
  MatX cross_;  // C x (channels * length), column-major flattening of the trajectory
  VecX rho_sum_;
  int sample_size_ = 0;
  int channels_ = 0;
  int length_ = 0;
};

}  // namespace stelle
