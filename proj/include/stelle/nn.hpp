#pragma once

#include "stelle/fwd.hpp"
#include "stelle/rng.hpp"

#include <span>
#include <vector>

namespace stelle {

struct MlpSpec {
  int input_dim = 1;
  int output_dim = 1;
  std::vector<int> hidden_dims{256};
  double dropout_rate = 0.1;

  void validate() const;
  int layers() const { return static_cast<int>(hidden_dims.size()) + 1; }
};

struct DenseLayer {
  MatX W;  // out x in
  VecX b;
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  /// PyTorch-style default init: W, b ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static MlpParams init(const MlpSpec& spec, Rng& rng);
  /// Same shapes, all zeros.
  static MlpParams zeros_like(const MlpParams& p);

  /// Views over every weight and bias buffer, in layer order (W0, b0, W1, b1, ...).
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;

  void set_zero();
  MlpParams& operator+=(const MlpParams& o);
  MlpParams& operator*=(double s);
};

/// Intermediates kept by the forward pass for backprop.
struct MlpCache {
  std::vector<VecX> inputs;  // input of every layer
  std::vector<VecX> pre;     // pre-activation of hidden layers
  std::vector<VecX> masks;   // scaled dropout masks (empty when inactive)
};

double gelu(double x);
double gelu_grad(double x);
VecX softmax(const VecX& logits);

/// Logits for `input`. Dropout is applied only when `training` (and then needs `rng`).
VecX mlp_forward(const MlpParams& p, const MlpSpec& spec, const VecX& input, bool training, Rng* rng,
                 MlpCache* cache);

/// Accumulates parameter gradients into `grads` and returns d loss / d input.
VecX mlp_backward(const MlpParams& p, const MlpCache& cache, const VecX& dlogits, MlpParams& grads);

/// d output / d input only, skipping parameter gradients.
VecX mlp_input_gradient(const MlpParams& p, const MlpCache& cache, const VecX& dlogits);

struct CrossEntropy {
  double loss = 0.0;
  VecX grad;  // d loss / d logits
};

/// -w[label] log softmax(logits)[label] and its gradient w[label] (softmax - onehot).
CrossEntropy weighted_cross_entropy(const VecX& logits, int label, const VecX& class_weights);

/// Scales all blocks so their joint L2 norm is at most `max_norm`; returns the norm before clipping.
double clip_global_norm(std::span<const std::span<double>> grads, double max_norm);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over a fixed list of parameter blocks, each assigned to a group
/// whose learning rate is lr * multiplier[group].
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<std::size_t> block_sizes, std::vector<int> block_groups, AdamConfig cfg);

  void step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
            std::span<const double> group_multipliers);

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_{};
  std::vector<int> groups_;
  std::vector<VecX> m_, v_;
  long t_ = 0;
};

}  // namespace stelle
