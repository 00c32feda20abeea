#pragma once

#include "stelle/concepts.hpp"
#include "stelle/kernel.hpp"
#include "stelle/nn.hpp"
#include "stelle/trajectory.hpp"

#include <optional>
#include <span>
#include <vector>

namespace stelle {

/// Per-class complement statistics: row k holds the mean / population std of every concept's
/// robustness over the training trajectories whose class is not k.
struct ClassStats {
  MatX mu;     // K x C
  MatX sigma;  // K x C
  std::vector<int> counts;

  bool fitted() const { return mu.size() > 0; }
  int classes() const { return static_cast<int>(mu.rows()); }
};

/// `rho` is C x n (concepts x trajectories); `labels` are dense in [0, K).
ClassStats fit_class_stats(const MatX& rho, std::span<const int> labels, int classes);

/// G(i, k) = |rho_i - mu(k, i)| / (sigma(k, i) + eps_G), a C x K matrix.
MatX discriminability(const VecX& rho, const ClassStats& stats, double eps_G);

struct EmbedStats {
  VecX mean;
  VecX std;
};

/// Column statistics of a C x n embedding matrix, std floored at 1e-6.
EmbedStats fit_embed_stats(const MatX& H);

enum class EmbeddingMode {
  Kernel,     // H = trajectory-formula kernel
  Robustness  // H = rho(phi_i, x)
};

struct ModelConfig {
  EmbeddingMode mode = EmbeddingMode::Kernel;
  KernelConfig kernel{};
  std::vector<int> hidden_dims{256};
  double dropout = 0.1;
  double temperature = 1.0;
  double epsilon = 1.0;
  double eps_G = 1e-6;
  double lambda_T = 0.1;
  double lambda_eps = 0.01;
  double t_rel = 1.0;

  void validate() const;
};

struct ModelState {
  ConceptSet concepts;
  EmbeddingMode mode = EmbeddingMode::Kernel;
  KernelConfig kernel{};
  ClassStats class_stats;
  EmbedStats embed_stats;
  double T = 1.0;
  double log_eps = 0.0;
  double eps_G = 1e-6;
  double lambda_T = 0.1;
  double lambda_eps = 0.01;
  double t_rel = 1.0;
  MlpSpec spec;
  MlpParams mlp;
  int K = 0;
  int C = 0;
  int channels = 0;
  int length = 0;
  /// Labelled training trajectories kept as the reference set for explanations.
  std::vector<Trajectory> reference;

  // Derived on prepare(); not persisted.
  KernelEmbedder embedder;
  MatX reference_rho;  // C x |reference|
  bool prepared = false;

  double epsilon() const { return std::exp(log_eps); }
  /// Rebuilds the Monte-Carlo sample, the kernel cache and the reference robustness.
  void prepare();
  std::vector<int> reference_labels() const;
};

/// Per-trajectory quantities that do not depend on learnable parameters.
struct Features {
  VecX rho;   // robustness of every concept
  VecX base;  // kernel embedding at epsilon = 1 (or rho in Robustness mode)
};

Features compute_features(const ModelState& state, const Trajectory& tau);
std::vector<Features> compute_features(const ModelState& state, std::span<const Trajectory> taus);

struct Forward {
  VecX H;
  VecX H_std;
  VecX gamma;
  MatX G;
  MatX z;
  MatX zbar;
  VecX logits;
  MlpCache cache;
};

double softsign(double x);
/// Row-major flattening of a C x K matrix: entry (i, k) goes to i * K + k.
VecX flatten_rows(const MatX& m);
MatX unflatten_rows(const VecX& v, int rows, int cols);

Forward forward_model(const ModelState& state, const Features& f, bool training = false, Rng* rng = nullptr);
Forward forward_model(const ModelState& state, const Trajectory& tau, bool training = false, Rng* rng = nullptr);

struct LossGrad {
  double loss = 0.0;
  double ce = 0.0;
  MlpParams mlp;
  double dT = 0.0;
  double dlog_eps = 0.0;
  double dlambda_T = 0.0;
  double dlambda_eps = 0.0;
};

/// Mean weighted cross-entropy over the batch plus lambda_T sigma(-T / t_rel) + lambda_eps (e^theta + e^-theta),
/// theta = log epsilon, with gradients for every learnable parameter.
LossGrad loss_and_grad(const ModelState& state, std::span<const Features> batch, std::span<const int> labels,
                       const VecX& class_weights, bool training = false, Rng* rng = nullptr);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double lr = 1e-3;
  int patience = 10;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
  double lr_multiplier_aux = 10.0;
  double clip_norm = 5.0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct FitResult {
  ModelState state;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Inverse class frequency weights normalised so a balanced set gets weight 1.
VecX inverse_frequency_weights(std::span<const int> labels, int classes);

/// Builds and trains a model on labelled trajectories.
FitResult fit(const ConceptSet& concepts, std::span<const Trajectory> train, const ModelConfig& mcfg,
              const TrainConfig& tcfg);

struct Prediction {
  int label = 0;
  VecX probabilities;
};

/// Argmax with ties broken by the lowest index.
int argmax(const VecX& v);

Prediction predict(const ModelState& state, const Trajectory& tau);
Prediction predict(const ModelState& state, const Features& f);

}  // namespace stelle
