#include "stelle/nn.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace stelle {

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("mlp: dimensions must be >= 1");
  for (int h : hidden_dims)
    if (h < 1) throw std::invalid_argument("mlp: hidden dimensions must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("mlp: dropout must lie in [0, 1)");
}

MlpParams MlpParams::init(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  MlpParams p;
  int fan_in = spec.input_dim;
  for (int l = 0; l < spec.layers(); ++l) {
    const int out = l + 1 < spec.layers() ? spec.hidden_dims[static_cast<std::size_t>(l)] : spec.output_dim;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    DenseLayer layer{MatX(out, fan_in), VecX(out)};
    // column-major fill order is fixed so init is reproducible
    for (Eigen::Index j = 0; j < layer.W.size(); ++j) layer.W.data()[j] = rng.uniform(-bound, bound);
    for (Eigen::Index j = 0; j < layer.b.size(); ++j) layer.b[j] = rng.uniform(-bound, bound);
    p.layers.push_back(std::move(layer));
    fan_in = out;
  }
  return p;
}

MlpParams MlpParams::zeros_like(const MlpParams& p) {
  MlpParams z = p;
  z.set_zero();
  return z;
}

std::vector<std::span<double>> MlpParams::blocks() {
  std::vector<std::span<double>> out;
  for (auto& l : layers) {
    out.emplace_back(l.W.data(), static_cast<std::size_t>(l.W.size()));
    out.emplace_back(l.b.data(), static_cast<std::size_t>(l.b.size()));
  }
  return out;
}

std::vector<std::span<const double>> MlpParams::blocks() const {
  std::vector<std::span<const double>> out;
  for (const auto& l : layers) {
    out.emplace_back(l.W.data(), static_cast<std::size_t>(l.W.size()));
    out.emplace_back(l.b.data(), static_cast<std::size_t>(l.b.size()));
  }
  return out;
}

void MlpParams::set_zero() {
  for (auto& l : layers) {
    l.W.setZero();
    l.b.setZero();
  }
}

MlpParams& MlpParams::operator+=(const MlpParams& o) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].W += o.layers[i].W;
    layers[i].b += o.layers[i].b;
  }
  return *this;
}

MlpParams& MlpParams::operator*=(double s) {
  for (auto& l : layers) {
    l.W *= s;
    l.b *= s;
  }
  return *this;
}

namespace {
constexpr double kGeluC = 0.044715;
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);
}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kSqrt2OverPi * (x + kGeluC * x * x * x))); }

double gelu_grad(double x) {
  const double u = kSqrt2OverPi * (x + kGeluC * x * x * x);
  const double th = std::tanh(u);
  const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluC * x * x);
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
}

VecX softmax(const VecX& logits) {
  const VecX e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

VecX mlp_forward(const MlpParams& p, const MlpSpec& spec, const VecX& input, bool training, Rng* rng,
                 MlpCache* cache) {
  if (input.size() != spec.input_dim)
    throw std::invalid_argument("mlp: input has " + std::to_string(input.size()) + " entries, expected " +
                                std::to_string(spec.input_dim));
  const bool drop = training && spec.dropout_rate > 0.0;
  if (drop && !rng) throw std::invalid_argument("mlp: training-mode dropout needs an rng");
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
    cache->masks.clear();
  }
  VecX x = input;
  const std::size_t last = p.layers.size() - 1;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    if (cache) cache->inputs.push_back(x);
    VecX a = p.layers[l].W * x + p.layers[l].b;
    if (l == last) return a;
    if (cache) cache->pre.push_back(a);
    x = a.unaryExpr(&gelu);
    if (drop) {
      const double keep = 1.0 - spec.dropout_rate;
      VecX mask(x.size());
      for (Eigen::Index i = 0; i < mask.size(); ++i) mask[i] = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
      x = x.cwiseProduct(mask);
      if (cache) cache->masks.push_back(std::move(mask));
    } else if (cache) {
      cache->masks.emplace_back();
    }
  }
  return x;
}

VecX mlp_backward(const MlpParams& p, const MlpCache& cache, const VecX& dlogits, MlpParams& grads) {
  VecX d = dlogits;
  for (std::size_t l = p.layers.size(); l-- > 0;) {
    grads.layers[l].W.noalias() += d * cache.inputs[l].transpose();
    grads.layers[l].b += d;
    d = p.layers[l].W.transpose() * d;
    if (l == 0) break;
    // through dropout and GELU of the previous hidden layer
    const std::size_t h = l - 1;
    if (cache.masks[h].size()) d = d.cwiseProduct(cache.masks[h]);
    d = d.cwiseProduct(cache.pre[h].unaryExpr(&gelu_grad));
  }
  return d;
}

VecX mlp_input_gradient(const MlpParams& p, const MlpCache& cache, const VecX& dlogits) {
  VecX d = dlogits;
  for (std::size_t l = p.layers.size(); l-- > 0;) {
    d = p.layers[l].W.transpose() * d;
    if (l == 0) break;
    const std::size_t h = l - 1;
    if (cache.masks[h].size()) d = d.cwiseProduct(cache.masks[h]);
    d = d.cwiseProduct(cache.pre[h].unaryExpr(&gelu_grad));
  }
  return d;
}

CrossEntropy weighted_cross_entropy(const VecX& logits, int label, const VecX& class_weights) {
  if (label < 0 || label >= logits.size()) throw std::out_of_range("cross entropy: label outside [0, K)");
  const double shift = logits.maxCoeff();
  const double lse = shift + std::log((logits.array() - shift).exp().sum());
  const double w = class_weights[label];
  CrossEntropy ce;
  ce.loss = -w * (logits[label] - lse);
  ce.grad = (logits.array() - lse).exp().matrix();
  ce.grad[label] -= 1.0;
  ce.grad *= w;
  return ce;
}

double clip_global_norm(std::span<const std::span<double>> grads, double max_norm) {
  double sq = 0.0;
  for (auto g : grads)
    for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto g : grads)
      for (double& v : g) v *= s;
  }
  return norm;
}

Adam::Adam(std::vector<std::size_t> block_sizes, std::vector<int> block_groups, AdamConfig cfg)
    : cfg_(cfg), groups_(std::move(block_groups)) {
  if (groups_.size() != block_sizes.size()) throw std::invalid_argument("adam: one group per block required");
  for (std::size_t n : block_sizes) {
    m_.push_back(VecX::Zero(static_cast<Eigen::Index>(n)));
    v_.push_back(VecX::Zero(static_cast<Eigen::Index>(n)));
  }
}

void Adam::step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                std::span<const double> group_multipliers) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw std::invalid_argument("adam: block count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double lr = cfg_.lr * group_multipliers[static_cast<std::size_t>(groups_[k])];
    auto& m = m_[k];
    auto& v = v_[k];
    if (params[k].size() != static_cast<std::size_t>(m.size()) || grads[k].size() != params[k].size())
      throw std::invalid_argument("adam: block size mismatch");
    for (std::size_t j = 0; j < params[k].size(); ++j) {
      const double g = grads[k][j];
      const auto i = static_cast<Eigen::Index>(j);
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      params[k][j] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
    }
  }
}

}  // namespace stelle
