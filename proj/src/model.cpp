#include "stelle/model.hpp"

#include "stelle/parallel.hpp"
#include "stelle/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace stelle {

ClassStats fit_class_stats(const MatX& rho, std::span<const int> labels, int classes) {
  if (static_cast<std::size_t>(rho.cols()) != labels.size()) throw std::invalid_argument("class stats: label count mismatch");
  if (classes < 2) throw std::invalid_argument("class stats: need at least two classes");
  ClassStats s;
  s.mu.setZero(classes, rho.rows());
  s.sigma.setZero(classes, rho.rows());
  s.counts.assign(static_cast<std::size_t>(classes), 0);
  for (int y : labels) {
    if (y < 0 || y >= classes) throw std::out_of_range("class stats: label outside [0, K)");
    ++s.counts[static_cast<std::size_t>(y)];
  }
  for (int k = 0; k < classes; ++k) {
    const int n = static_cast<int>(labels.size()) - s.counts[static_cast<std::size_t>(k)];
    if (n == 0) throw std::invalid_argument("class stats: class " + std::to_string(k) + " has no complement");
    VecX sum = VecX::Zero(rho.rows());
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (labels[j] != k) sum += rho.col(static_cast<Eigen::Index>(j));
    const VecX mean = sum / n;
    VecX sq = VecX::Zero(rho.rows());
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (labels[j] != k) sq += (rho.col(static_cast<Eigen::Index>(j)) - mean).cwiseAbs2();
    s.mu.row(k) = mean.transpose();
    s.sigma.row(k) = (sq / n).cwiseSqrt().transpose();
  }
  return s;
}

MatX discriminability(const VecX& rho, const ClassStats& stats, double eps_G) {
  if (!stats.fitted()) throw std::logic_error("discriminability: class statistics are not fitted");
  if (rho.size() != stats.mu.cols()) throw std::invalid_argument("discriminability: concept count mismatch");
  const ArrX r = rho.array();
  MatX G(rho.size(), stats.classes());
  for (int k = 0; k < stats.classes(); ++k)
    G.col(k) = ((r - stats.mu.row(k).transpose().array()).abs() / (stats.sigma.row(k).transpose().array() + eps_G))
                   .matrix();
  return G;
}

EmbedStats fit_embed_stats(const MatX& H) {
  if (H.cols() == 0) throw std::invalid_argument("embed stats: no samples");
  EmbedStats s;
  s.mean = H.rowwise().mean();
  s.std = ((H.colwise() - s.mean).cwiseAbs2().rowwise().mean()).cwiseSqrt().cwiseMax(1e-6);
  return s;
}

void ModelConfig::validate() const {
  kernel.validate();
  for (int h : hidden_dims)
    if (h < 1) throw std::invalid_argument("model: hidden dimensions must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("model: dropout must lie in [0, 1)");
  if (!(temperature > 0.0) || !(epsilon > 0.0) || !(eps_G > 0.0) || !(t_rel > 0.0))
    throw std::invalid_argument("model: temperature, epsilon, eps_G and t_rel must be > 0");
  if (lambda_T < 0.0 || lambda_eps < 0.0) throw std::invalid_argument("model: regulariser strengths must be >= 0");
}

void ModelState::prepare() {
  if (concepts.formulas.empty()) throw std::invalid_argument("model: empty concept set");
  C = static_cast<int>(concepts.size());
  if (mode == EmbeddingMode::Kernel) {
    const auto sample = mc_sample(kernel, channels, length);
    embedder = KernelEmbedder(concepts.formulas, sample);
  }
  reference_rho = robustness_matrix(concepts.formulas, reference).unaryExpr(&clamp_large);
  prepared = true;
}

std::vector<int> ModelState::reference_labels() const {
  std::vector<int> out;
  out.reserve(reference.size());
  for (const auto& t : reference) out.push_back(t.label.value_or(-1));
  return out;
}

Features compute_features(const ModelState& state, const Trajectory& tau) {
  if (tau.channels() != state.channels || tau.length() != state.length)
    throw std::invalid_argument("model: trajectory is " + std::to_string(tau.channels()) + "x" +
                                std::to_string(tau.length()) + " but the model expects " +
                                std::to_string(state.channels) + "x" + std::to_string(state.length));
  Features f;
  f.rho.resize(state.C);
  for (int i = 0; i < state.C; ++i)
    f.rho[i] = clamp_large(robustness(state.concepts.formulas[static_cast<std::size_t>(i)], tau, 0));
  f.base = state.mode == EmbeddingMode::Kernel ? state.embedder.unscaled(tau) : f.rho;
  return f;
}

std::vector<Features> compute_features(const ModelState& state, std::span<const Trajectory> taus) {
  std::vector<Features> out(taus.size());
  parallel_for(taus.size(), [&](std::size_t j) { out[j] = compute_features(state, taus[j]); });
  return out;
}

double softsign(double x) { return x / (1.0 + std::abs(x)); }

VecX flatten_rows(const MatX& m) {
  VecX v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) v[i * m.cols() + k] = m(i, k);
  return v;
}

MatX unflatten_rows(const VecX& v, int rows, int cols) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols) throw std::invalid_argument("unflatten: size mismatch");
  MatX m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = v[static_cast<Eigen::Index>(i) * cols + k];
  return m;
}

Forward forward_model(const ModelState& state, const Features& f, bool training, Rng* rng) {
  Forward out;
  out.H = state.mode == EmbeddingMode::Kernel ? VecX(f.base / state.epsilon()) : f.base;
  out.H_std = ((out.H - state.embed_stats.mean).array() / state.embed_stats.std.array()).matrix();
  out.gamma = out.H_std / state.T;
  out.G = discriminability(f.rho, state.class_stats, state.eps_G);
  out.z = out.G.array().colwise() * out.gamma.array();
  out.zbar = out.z.unaryExpr(&softsign);
  out.logits = mlp_forward(state.mlp, state.spec, flatten_rows(out.zbar), training, rng, &out.cache);
  return out;
}

Forward forward_model(const ModelState& state, const Trajectory& tau, bool training, Rng* rng) {
  return forward_model(state, compute_features(state, tau), training, rng);
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double penalty(const ModelState& s) {
  return s.lambda_T * sigmoid(-s.T / s.t_rel) + s.lambda_eps * (std::exp(s.log_eps) + std::exp(-s.log_eps));
}

}  // namespace

LossGrad loss_and_grad(const ModelState& state, std::span<const Features> batch, std::span<const int> labels,
                       const VecX& class_weights, bool training, Rng* rng) {
  if (batch.empty() || batch.size() != labels.size()) throw std::invalid_argument("loss: empty or mismatched batch");
  LossGrad g;
  g.mlp = MlpParams::zeros_like(state.mlp);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const int K = state.K;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Forward fw = forward_model(state, batch[b], training, rng);
    const CrossEntropy ce = weighted_cross_entropy(fw.logits, labels[b], class_weights);
    g.ce += ce.loss * inv_n;
    const VecX d_in = mlp_backward(state.mlp, fw.cache, ce.grad * inv_n, g.mlp);
    // back through softsign, the Hadamard product and the standardisation
    const MatX d_zbar = unflatten_rows(d_in, state.C, K);
    const MatX d_z = d_zbar.array() / (1.0 + fw.z.array().abs()).square();
    const VecX d_gamma = (d_z.array() * fw.G.array()).rowwise().sum().matrix();
    g.dT -= d_gamma.dot(fw.gamma) / state.T;
    if (state.mode == EmbeddingMode::Kernel) {
      // H = base * exp(-theta), so dH/dtheta = -H
      const VecX d_H = (d_gamma.array() / (state.T * state.embed_stats.std.array())).matrix();
      g.dlog_eps -= d_H.dot(fw.H);
    }
  }
  const double u = -state.T / state.t_rel;
  const double sg = sigmoid(u);
  g.dT -= state.lambda_T * sg * (1.0 - sg) / state.t_rel;
  g.dlambda_T = sg;
  g.dlambda_eps = std::exp(state.log_eps) + std::exp(-state.log_eps);
  g.dlog_eps += state.lambda_eps * (std::exp(state.log_eps) - std::exp(-state.log_eps));
  g.loss = g.ce + penalty(state);
  return g;
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || patience < 1) throw std::invalid_argument("train: counts must be >= 1");
  if (!(lr > 0.0) || !(lr_multiplier_aux > 0.0) || !(clip_norm > 0.0))
    throw std::invalid_argument("train: learning rates and clip norm must be > 0");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw std::invalid_argument("train: val_fraction must lie in (0, 1)");
}

VecX inverse_frequency_weights(std::span<const int> labels, int classes) {
  VecX counts = VecX::Zero(classes);
  for (int y : labels) counts[y] += 1.0;
  VecX w(classes);
  for (int k = 0; k < classes; ++k)
    w[k] = counts[k] > 0 ? static_cast<double>(labels.size()) / (classes * counts[k]) : 0.0;
  return w;
}

int argmax(const VecX& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

Prediction predict(const ModelState& state, const Features& f) {
  const Forward fw = forward_model(state, f, false, nullptr);
  Prediction p;
  p.probabilities = softmax(fw.logits);
  p.label = argmax(p.probabilities);
  return p;
}

Prediction predict(const ModelState& state, const Trajectory& tau) { return predict(state, compute_features(state, tau)); }

namespace {

// Stratified split: every class contributes round(fraction * n_k) items to validation,
// at least one when it has two or more members.
void split_validation(std::span<const int> labels, int classes, double fraction, Rng& rng, std::vector<std::size_t>& fit,
                      std::vector<std::size_t>& val) {
  for (int k = 0; k < classes; ++k) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (labels[j] == k) idx.push_back(j);
    rng.shuffle(idx.begin(), idx.end());
    std::size_t nv = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(idx.size())));
    if (idx.size() >= 2) nv = std::clamp<std::size_t>(nv, 1, idx.size() - 1);
    else nv = 0;
    val.insert(val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(nv));
    fit.insert(fit.end(), idx.begin() + static_cast<std::ptrdiff_t>(nv), idx.end());
  }
  std::sort(fit.begin(), fit.end());
  std::sort(val.begin(), val.end());
}

double mean_ce(const ModelState& s, const std::vector<Features>& feats, std::span<const std::size_t> idx,
               std::span<const int> labels, const VecX& w, double* accuracy) {
  double loss = 0.0;
  int correct = 0;
  for (std::size_t j : idx) {
    const Forward fw = forward_model(s, feats[j]);
    loss += weighted_cross_entropy(fw.logits, labels[j], w).loss;
    correct += argmax(fw.logits) == labels[j];
  }
  if (accuracy) *accuracy = idx.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(idx.size());
  return idx.empty() ? 0.0 : loss / static_cast<double>(idx.size());
}

}  // namespace

FitResult fit(const ConceptSet& concepts, std::span<const Trajectory> train, const ModelConfig& mcfg,
              const TrainConfig& tcfg) {
  mcfg.validate();
  tcfg.validate();
  if (train.empty()) throw std::invalid_argument("fit: empty training set");
  std::vector<int> labels;
  int K = 0;
  for (const auto& t : train) {
    if (!t.label) throw std::invalid_argument("fit: trajectory '" + t.id + "' has no label");
    labels.push_back(*t.label);
    K = std::max(K, *t.label + 1);
  }
  {
    std::vector<int> present(static_cast<std::size_t>(K), 0);
    for (int y : labels) present[static_cast<std::size_t>(y)] = 1;
    if (std::count(present.begin(), present.end(), 1) < 2)
      throw std::invalid_argument("fit: need at least two classes in the training data");
  }

  ModelState s;
  s.concepts = concepts.source_length == train.front().length() ? concepts
                                                                 : rescale_concepts(concepts, train.front().length());
  s.mode = mcfg.mode;
  s.kernel = mcfg.kernel;
  s.T = mcfg.temperature;
  s.log_eps = std::log(mcfg.epsilon);
  s.eps_G = mcfg.eps_G;
  s.lambda_T = mcfg.lambda_T;
  s.lambda_eps = mcfg.lambda_eps;
  s.t_rel = mcfg.t_rel;
  s.K = K;
  s.channels = train.front().channels();
  s.length = train.front().length();
  s.reference.assign(train.begin(), train.end());
  s.prepare();

  Rng rng(substream_seed(tcfg.seed, 1));
  std::vector<std::size_t> fit_idx, val_idx;
  split_validation(labels, K, tcfg.val_fraction, rng, fit_idx, val_idx);

  const std::vector<Features> feats = compute_features(s, train);
  {
    MatX rho(s.C, static_cast<Eigen::Index>(fit_idx.size()));
    MatX H(s.C, static_cast<Eigen::Index>(fit_idx.size()));
    std::vector<int> fit_labels;
    for (std::size_t c = 0; c < fit_idx.size(); ++c) {
      const auto col = static_cast<Eigen::Index>(c);
      rho.col(col) = feats[fit_idx[c]].rho;
      H.col(col) = s.mode == EmbeddingMode::Kernel ? VecX(feats[fit_idx[c]].base / s.epsilon()) : feats[fit_idx[c]].base;
      fit_labels.push_back(labels[fit_idx[c]]);
    }
    s.class_stats = fit_class_stats(rho, fit_labels, K);
    s.embed_stats = fit_embed_stats(H);
  }
  std::vector<int> fit_labels;
  for (std::size_t j : fit_idx) fit_labels.push_back(labels[j]);
  const VecX weights = inverse_frequency_weights(fit_labels, K);

  s.spec = MlpSpec{s.C * K, K, mcfg.hidden_dims, mcfg.dropout};
  Rng init_rng(substream_seed(tcfg.seed, 2));
  s.mlp = MlpParams::init(s.spec, init_rng);

  // block layout: MLP buffers (group 0) then T, log_eps, lambda_T, lambda_eps (group 1)
  std::vector<std::size_t> sizes;
  std::vector<int> groups;
  for (auto b : s.mlp.blocks()) {
    sizes.push_back(b.size());
    groups.push_back(0);
  }
  for (int i = 0; i < 4; ++i) {
    sizes.push_back(1);
    groups.push_back(1);
  }
  Adam adam(sizes, groups, AdamConfig{tcfg.lr});
  const double multipliers[2] = {1.0, tcfg.lr_multiplier_aux};

  FitResult result;
  struct Snapshot {
    MlpParams mlp;
    double T, log_eps, lambda_T, lambda_eps;
  };
  Snapshot best{s.mlp, s.T, s.log_eps, s.lambda_T, s.lambda_eps};
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  Rng shuffle_rng(substream_seed(tcfg.seed, 3));
  Rng dropout_rng(substream_seed(tcfg.seed, 4));
  std::vector<std::size_t> order = fit_idx;
  const std::vector<std::size_t>& monitor = val_idx.empty() ? fit_idx : val_idx;

  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tcfg.batch_size));
      std::vector<Features> batch;
      std::vector<int> batch_labels;
      for (std::size_t j = start; j < end; ++j) {
        batch.push_back(feats[order[j]]);
        batch_labels.push_back(labels[order[j]]);
      }
      LossGrad g = loss_and_grad(s, batch, batch_labels, weights, true, &dropout_rng);
      epoch_loss += g.loss;
      ++batches;

      auto grads = g.mlp.blocks();
      grads.emplace_back(&g.dT, 1);
      grads.emplace_back(&g.dlog_eps, 1);
      grads.emplace_back(&g.dlambda_T, 1);
      grads.emplace_back(&g.dlambda_eps, 1);
      clip_global_norm(grads, tcfg.clip_norm);

      auto params = s.mlp.blocks();
      params.emplace_back(&s.T, 1);
      params.emplace_back(&s.log_eps, 1);
      params.emplace_back(&s.lambda_T, 1);
      params.emplace_back(&s.lambda_eps, 1);
      std::vector<std::span<const double>> cgrads(grads.begin(), grads.end());
      adam.step(params, cgrads, multipliers);
      // keep the scale parameters in a numerically safe range
      s.T = std::clamp(s.T, 1e-2, 1e2);
      s.log_eps = std::clamp(s.log_eps, -10.0, 10.0);
      s.lambda_T = std::max(0.0, s.lambda_T);
      s.lambda_eps = std::max(0.0, s.lambda_eps);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(std::max<std::size_t>(1, batches));
    rec.val_loss = mean_ce(s, feats, monitor, labels, weights, &rec.val_accuracy);
    result.history.push_back(rec);
    if (rec.val_loss < best_val - 1e-12) {
      best_val = rec.val_loss;
      best = {s.mlp, s.T, s.log_eps, s.lambda_T, s.lambda_eps};
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= tcfg.patience) {
      break;
    }
  }
  s.mlp = std::move(best.mlp);
  s.T = best.T;
  s.log_eps = best.log_eps;
  s.lambda_T = best.lambda_T;
  s.lambda_eps = best.lambda_eps;
  result.state = std::move(s);
  return result;
}

}  // namespace stelle
