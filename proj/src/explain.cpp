#include "stelle/explain.hpp"

#include "stelle/robustness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace stelle {

void ExplainConfig::validate() const {
  if (budget && *budget < 1) throw std::invalid_argument("explain: budget must be >= 1");
  if (!(cumulative > 0.0 && cumulative <= 1.0)) throw std::invalid_argument("explain: cumulative cut-off must lie in (0, 1]");
  if (!(simplification_slack >= 0.0 && simplification_slack < 1.0))
    throw std::invalid_argument("explain: simplification slack must lie in [0, 1)");
  if (!(coverage >= 0.0 && coverage < 1.0)) throw std::invalid_argument("explain: coverage must lie in [0, 1)");
  if (ig_steps < 8) throw std::invalid_argument("explain: ig_steps must be >= 8");
}

double head_probability(const ModelState& state, const MatX& z, int k) {
  const VecX logits = mlp_forward(state.mlp, state.spec, flatten_rows(z.unaryExpr(&softsign)), false, nullptr, nullptr);
  return softmax(logits)[k];
}

MatX head_gradient(const ModelState& state, const MatX& z, int k) {
  MlpCache cache;
  const VecX logits = mlp_forward(state.mlp, state.spec, flatten_rows(z.unaryExpr(&softsign)), false, nullptr, &cache);
  const VecX p = softmax(logits);
  // d p_k / d logits = p_k (e_k - p)
  VecX d = -p[k] * p;
  d[k] += p[k];
  const MatX d_zbar = unflatten_rows(mlp_input_gradient(state.mlp, cache, d), static_cast<int>(z.rows()),
                                     static_cast<int>(z.cols()));
  return d_zbar.array() / (1.0 + z.array().abs()).square();
}

AttributionMatrix integrated_gradients(const ModelState& state, const MatX& z, int k, int steps) {
  if (k < 0 || k >= state.K) throw std::out_of_range("integrated gradients: class outside [0, K)");
  if (steps < 1) throw std::invalid_argument("integrated gradients: steps must be >= 1");
  MatX avg = MatX::Zero(z.rows(), z.cols());
  for (int s = 1; s <= steps; ++s) {
    const double alpha = (s - 0.5) / steps;
    avg += head_gradient(state, alpha * z, k);
  }
  avg /= steps;
  AttributionMatrix A;
  A.raw = z.cwiseProduct(avg);
  A.values = normalise_minmax(A.raw);
  A.target_class = k;
  return A;
}

MatX normalise_minmax(const MatX& m) {
  const double lo = m.minCoeff();
  const double hi = m.maxCoeff();
  if (!(hi > lo)) return MatX::Constant(m.rows(), m.cols(), 0.5);
  return ((m.array() - lo) / (hi - lo)).matrix();
}

VecX relevance(const MatX& A, int k) {
  const Eigen::Index K = A.cols();
  if (K < 2) throw std::invalid_argument("relevance: needs at least two classes");
  if (k < 0 || k >= K) throw std::out_of_range("relevance: class outside [0, K)");
  const VecX others = (A.rowwise().sum() - A.col(k)) / static_cast<double>(K - 1);
  return (A.col(k) - others).cwiseAbs();
}

LocalSelection select_concepts_local(const VecX& r, const ExplainConfig& cfg) {
  if (r.size() == 0) throw std::invalid_argument("local selection: empty relevance vector");
  LocalSelection out;
  const double total = r.sum();
  if (!(total > 0.0)) {
    out.indices = {0};
    out.degenerate = true;
    return out;
  }
  std::vector<int> order(static_cast<std::size_t>(r.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return r[a] > r[b]; });
  std::size_t take = 0;
  if (cfg.budget) {
    take = std::min<std::size_t>(static_cast<std::size_t>(*cfg.budget), order.size());
  } else {
    // relative slack absorbs rounding in the running sum
    const double goal = cfg.cumulative * total - 1e-12 * total;
    double acc = 0.0;
    while (take < order.size()) {
      acc += r[order[take++]];
      if (acc >= goal) break;
    }
  }
  out.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
  return out;
}

namespace {

Formula and_fold(const std::vector<Formula>& parts) {
  Formula acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = Formula::conjunction(acc, parts[i]);
  return acc;
}

Formula or_fold(const std::vector<Formula>& parts) {
  Formula acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = Formula::disjunction(acc, parts[i]);
  return acc;
}

void flatten(const Formula& f, Op op, std::vector<Formula>& out) {
  if (f.op() == op) {
    flatten(f.lhs(), op, out);
    flatten(f.rhs(), op, out);
  } else {
    out.push_back(f);
  }
}

}  // namespace

Formula LocalExplanation::raw_conjunction() const {
  std::vector<Formula> parts;
  for (const auto& s : selected) parts.push_back(s.formula);
  return and_fold(parts);
}

LocalExplanation explain_local(const ModelState& state, const Trajectory& tau, int target_class,
                               const ExplainConfig& cfg) {
  return explain_local(state, compute_features(state, tau), tau, target_class, cfg);
}

LocalExplanation explain_local(const ModelState& state, const Features& feats, const Trajectory& tau,
                               int target_class, const ExplainConfig& cfg) {
  cfg.validate();
  if (!state.prepared) throw std::logic_error("explain: model state is not prepared");
  if (target_class < 0 || target_class >= state.K) throw std::out_of_range("explain: class outside [0, K)");

  LocalExplanation ex;
  ex.target_class = target_class;
  const Forward fw = forward_model(state, feats);
  const AttributionMatrix A = integrated_gradients(state, fw.z, target_class, cfg.ig_steps);
  const VecX r = relevance(A.values, target_class);
  const LocalSelection sel = select_concepts_local(r, cfg);
  ex.degenerate = sel.degenerate;

  std::vector<Eigen::Index> opposers;
  for (std::size_t j = 0; j < state.reference.size(); ++j) {
    const auto& y = state.reference[j].label;
    if (y && *y != target_class) opposers.push_back(static_cast<Eigen::Index>(j));
  }
  if (opposers.empty()) throw std::invalid_argument("explain: the reference set has no trajectory of another class");

  std::vector<double> opp(opposers.size());
  for (int i : sel.indices) {
    const Formula& phi = state.concepts.formulas[static_cast<std::size_t>(i)];
    ex.selected.push_back({i, phi, r[i]});
    for (std::size_t j = 0; j < opposers.size(); ++j) opp[j] = state.reference_rho(i, opposers[j]);
    ex.refined.push_back(separate(phi, feats.rho[i], opp, tau));
  }
  ex.conjunction = and_fold(ex.refined);

  DataAwareOptions opts;
  opts.tolerance = cfg.simplification_slack;
  opts.target_class = target_class;
  opts.must_hold = &tau;
  ex.postprocessed = simplify(ex.conjunction, state.reference, opts, &ex.trace);
  return ex;
}

BoolMat division_matrix(const MatX& class_rho, const MatX& other_rho) {
  if (other_rho.rows() == 0) throw std::invalid_argument("division matrix: no trajectories outside the class");
  if (class_rho.cols() != other_rho.cols()) throw std::invalid_argument("division matrix: formula count mismatch");
  const Eigen::Array<double, 1, Eigen::Dynamic> lo = other_rho.colwise().minCoeff().array();
  const Eigen::Array<double, 1, Eigen::Dynamic> hi = other_rho.colwise().maxCoeff().array();
  BoolMat D(class_rho.rows(), class_rho.cols());
  for (Eigen::Index i = 0; i < class_rho.rows(); ++i)
    D.row(i) = class_rho.row(i).array() < lo || class_rho.row(i).array() > hi;
  return D;
}

BoolMat division_matrix(std::span<const Formula> formulas, std::span<const Trajectory> class_k,
                        std::span<const Trajectory> others) {
  return division_matrix(MatX(robustness_matrix(formulas, class_k).transpose()),
                         MatX(robustness_matrix(formulas, others).transpose()));
}

namespace {

using Bits = std::vector<std::uint64_t>;

Bits column_bits(const BoolMat& D, Eigen::Index j, const std::vector<Eigen::Index>& rows) {
  Bits b((rows.size() + 63) / 64, 0);
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (D(rows[r], j)) b[r / 64] |= std::uint64_t{1} << (r % 64);
  return b;
}

std::vector<Eigen::Index> coverable_rows(const BoolMat& D, int& uncovered) {
  std::vector<Eigen::Index> rows;
  uncovered = 0;
  for (Eigen::Index i = 0; i < D.rows(); ++i) {
    if (D.row(i).any()) rows.push_back(i);
    else ++uncovered;
  }
  return rows;
}

void check_costs(const BoolMat& D, std::span<const double> costs) {
  if (static_cast<std::size_t>(D.cols()) != costs.size()) throw std::invalid_argument("set cover: one cost per column");
  for (double c : costs)
    if (!(c > 0.0)) throw std::invalid_argument("set cover: costs must be > 0");
}

struct BranchAndBound {
  std::vector<Bits> cols;
  std::span<const double> costs;
  std::size_t nrows = 0;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_sel;
  std::vector<int> sel;

  void search(Bits covered, double cost) {
    if (cost >= best) return;
    // first uncovered row
    std::size_t row = nrows;
    for (std::size_t w = 0; w < covered.size(); ++w) {
      std::uint64_t free = ~covered[w];
      if (w + 1 == covered.size() && nrows % 64) free &= (std::uint64_t{1} << (nrows % 64)) - 1;
      if (free) {
        row = w * 64 + static_cast<std::size_t>(std::countr_zero(free));
        break;
      }
    }
    if (row == nrows) {
      best = cost;
      best_sel = sel;
      return;
    }
    // branch over the columns that cover it, cheapest first
    std::vector<int> options;
    for (std::size_t j = 0; j < cols.size(); ++j)
      if (cols[j][row / 64] >> (row % 64) & 1) options.push_back(static_cast<int>(j));
    std::stable_sort(options.begin(), options.end(), [&](int a, int b) { return costs[a] < costs[b]; });
    for (int j : options) {
      if (cost + costs[j] >= best) continue;
      Bits next = covered;
      for (std::size_t w = 0; w < next.size(); ++w) next[w] |= cols[static_cast<std::size_t>(j)][w];
      sel.push_back(j);
      search(std::move(next), cost + costs[j]);
      sel.pop_back();
    }
  }
};

}  // namespace

CoverResult set_cover_exact(const BoolMat& D, std::span<const double> costs) {
  check_costs(D, costs);
  CoverResult out;
  out.exact = true;
  const auto rows = coverable_rows(D, out.uncovered);
  if (rows.empty()) return out;
  BranchAndBound bb;
  bb.costs = costs;
  bb.nrows = rows.size();
  for (Eigen::Index j = 0; j < D.cols(); ++j) bb.cols.push_back(column_bits(D, j, rows));
  bb.search(Bits((rows.size() + 63) / 64, 0), 0.0);
  out.selected = bb.best_sel;
  std::sort(out.selected.begin(), out.selected.end());
  out.cost = bb.best;
  return out;
}

CoverResult set_cover_greedy(const BoolMat& D, std::span<const double> costs) {
  check_costs(D, costs);
  CoverResult out;
  const auto rows = coverable_rows(D, out.uncovered);
  if (rows.empty()) return out;
  std::vector<Bits> cols;
  for (Eigen::Index j = 0; j < D.cols(); ++j) cols.push_back(column_bits(D, j, rows));
  Bits covered((rows.size() + 63) / 64, 0);
  std::size_t n_covered = 0;
  while (n_covered < rows.size()) {
    int best = -1;
    double best_ratio = 0.0;
    std::size_t best_gain = 0;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      std::size_t gain = 0;
      for (std::size_t w = 0; w < covered.size(); ++w)
        gain += static_cast<std::size_t>(std::popcount(cols[j][w] & ~covered[w]));
      if (gain == 0) continue;
      const double ratio = static_cast<double>(gain) / costs[j];
      if (best < 0 || ratio > best_ratio) {
        best = static_cast<int>(j);
        best_ratio = ratio;
        best_gain = gain;
      }
    }
    for (std::size_t w = 0; w < covered.size(); ++w) covered[w] |= cols[static_cast<std::size_t>(best)][w];
    n_covered += best_gain;
    out.selected.push_back(best);
    out.cost += costs[best];
  }
  std::sort(out.selected.begin(), out.selected.end());
  return out;
}

CoverResult separability_cover(const SeparabilityData& data, std::span<const double> costs) {
  const auto n = static_cast<std::size_t>(data.sat.rows());
  if (data.positive.size() != n) throw std::invalid_argument("separability cover: label count mismatch");
  if (static_cast<std::size_t>(data.sat.cols()) != costs.size())
    throw std::invalid_argument("separability cover: one cost per column");
  std::vector<char> covered(n, 0);
  // with the empty disjunction every negative is a true negative
  long score = 0;
  for (char p : data.positive) score += !p;
  CoverResult out;
  std::vector<char> used(costs.size(), 0);
  while (true) {
    int best = -1;
    long best_gain = 0;
    for (std::size_t j = 0; j < costs.size(); ++j) {
      if (used[j]) continue;
      long gain = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (!covered[i] && data.sat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
          gain += data.positive[i] ? 1 : -1;
      if (gain <= 0) continue;
      if (best < 0 || gain > best_gain || (gain == best_gain && costs[j] < costs[static_cast<std::size_t>(best)])) {
        best = static_cast<int>(j);
        best_gain = gain;
      }
    }
    if (best < 0) break;
    used[static_cast<std::size_t>(best)] = 1;
    for (std::size_t i = 0; i < n; ++i)
      if (data.sat(static_cast<Eigen::Index>(i), best)) covered[i] = 1;
    score += best_gain;
    out.selected.push_back(best);
    out.cost += costs[static_cast<std::size_t>(best)];
  }
  for (std::size_t i = 0; i < n; ++i) out.uncovered += data.positive[i] && !covered[i];
  std::sort(out.selected.begin(), out.selected.end());
  return out;
}

CoverResult global_cover(const BoolMat& D, std::span<const double> costs, double coverage,
                         const SeparabilityData* data) {
  if (D.size() == 0 && coverage > 0.0) throw std::invalid_argument("set cover: empty division matrix");
  if (coverage > 0.0) return D.cols() <= 20 ? set_cover_exact(D, costs) : set_cover_greedy(D, costs);
  if (!data) throw std::invalid_argument("set cover: separability mode needs satisfaction data");
  return separability_cover(*data, costs);
}

GlobalExplanation explain_global(const ModelState& state, std::span<const Trajectory> train, int k,
                                 const ExplainConfig& cfg) {
  cfg.validate();
  std::vector<Trajectory> in_class, others;
  for (const auto& t : train) {
    if (!t.label) throw std::invalid_argument("explain: training trajectory '" + t.id + "' has no label");
    (*t.label == k ? in_class : others).push_back(t);
  }
  if (in_class.empty()) throw std::invalid_argument("explain: class " + std::to_string(k) + " has no training trajectory");
  if (others.empty()) throw std::invalid_argument("explain: no training trajectory outside class " + std::to_string(k));

  GlobalExplanation g;
  g.class_index = k;
  std::unordered_set<Formula, FormulaHash> seen;
  const auto add = [&](const Formula& f) {
    if (seen.insert(f).second) g.candidates.push_back(f);
  };
  const std::vector<Features> feats = compute_features(state, in_class);
  for (std::size_t i = 0; i < in_class.size(); ++i) {
    const LocalExplanation ex = explain_local(state, feats[i], in_class[i], k, cfg);
    std::vector<Formula> parts;
    flatten(ex.postprocessed, Op::And, parts);
    for (const auto& p : parts) add(p);
    add(ex.postprocessed);
  }

  const MatX class_rho = robustness_matrix(g.candidates, in_class).transpose();
  const MatX other_rho = robustness_matrix(g.candidates, others).transpose();
  const BoolMat D = division_matrix(class_rho, other_rho);
  std::vector<double> costs;
  for (const auto& f : g.candidates) costs.push_back(f.node_count());

  SeparabilityData data;
  data.sat.resize(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(g.candidates.size()));
  {
    Eigen::Index ci = 0, oi = 0;
    for (std::size_t j = 0; j < train.size(); ++j) {
      const bool pos = *train[j].label == k;
      data.positive.push_back(pos);
      const auto row = pos ? class_rho.row(ci++) : other_rho.row(oi++);
      data.sat.row(static_cast<Eigen::Index>(j)) = row.array() >= 0.0;
    }
  }
  const CoverResult cover = global_cover(D, costs, cfg.coverage, &data);
  g.uncovered = cover.uncovered;
  for (int j : cover.selected) g.disjuncts.push_back(g.candidates[static_cast<std::size_t>(j)]);
  if (g.disjuncts.empty()) {
    g.empty_cover = true;
    g.disjunction = Formula::falsity();
    g.postprocessed = g.disjunction;
    return g;
  }
  g.disjunction = or_fold(g.disjuncts);
  DataAwareOptions opts;
  opts.tolerance = cfg.simplification_slack;
  opts.target_class = k;
  g.postprocessed = simplify(g.disjunction, train, opts);
  return g;
}

}  // namespace stelle
