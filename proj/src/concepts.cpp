#include "stelle/concepts.hpp"

#include "stelle/parallel.hpp"
#include "stelle/parser.hpp"
#include "stelle/rng.hpp"
#include "stelle/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace stelle {

void TemplateConfig::validate() const {
  if (max_nodes < 1) throw std::invalid_argument("templates: max_nodes must be >= 1");
  if (vars_per_formula < 1 || vars_per_formula > 3) throw std::invalid_argument("templates: vars_per_formula must be in [1, 3]");
  if (channels < 1) throw std::invalid_argument("templates: channels must be >= 1");
  if (duplicate_across_variables && vars_per_formula != 1)
    throw std::invalid_argument("templates: duplication across variables requires one variable per formula");
}

std::vector<Formula> enumerate_templates(const TemplateConfig& cfg) {
  cfg.validate();
  const int vars = cfg.duplicate_across_variables ? 1 : cfg.channels;
  const auto fits = [&](const Formula& f) {
    return static_cast<int>(variable_set(f).size()) <= cfg.vars_per_formula;
  };

  // by_nodes[m] holds every template with exactly m nodes
  std::vector<std::vector<Formula>> by_nodes(static_cast<std::size_t>(cfg.max_nodes) + 1);
  for (int v = 0; v < vars; ++v) {
    by_nodes[1].push_back(Formula::atom(v, Relation::GreaterEq, Atom::placeholder_threshold()));
    by_nodes[1].push_back(Formula::atom(v, Relation::LessEq, Atom::placeholder_threshold()));
  }
  const Interval free = Interval::placeholder();
  for (int m = 2; m <= cfg.max_nodes; ++m) {
    auto& out = by_nodes[static_cast<std::size_t>(m)];
    for (const Formula& f : by_nodes[static_cast<std::size_t>(m) - 1]) {
      out.push_back(Formula::negation(f));
      out.push_back(Formula::eventually(free, f));
      out.push_back(Formula::globally(free, f));
    }
    for (int l = 1; l + 1 < m; ++l) {
      const int r = m - 1 - l;
      for (const Formula& a : by_nodes[static_cast<std::size_t>(l)]) {
        for (const Formula& b : by_nodes[static_cast<std::size_t>(r)]) {
          for (Formula f : {Formula::conjunction(a, b), Formula::disjunction(a, b), Formula::until(free, a, b)})
            if (fits(f)) out.push_back(std::move(f));
        }
      }
    }
  }

  std::vector<Formula> all;
  std::unordered_set<Formula, FormulaHash> seen;
  for (const auto& tier : by_nodes)
    for (const Formula& f : tier)
      if (seen.insert(f).second) all.push_back(f);
  return all;
}

std::span<const double> ParameterGrid::thresholds_for(int var) const {
  if (thresholds.empty()) throw std::invalid_argument("parameter grid has no thresholds");
  if (thresholds.size() == 1) return thresholds.front();
  if (var < 0 || static_cast<std::size_t>(var) >= thresholds.size())
    throw std::out_of_range("parameter grid has no thresholds for variable x" + std::to_string(var));
  return thresholds[static_cast<std::size_t>(var)];
}

namespace {

// Fill placeholders in pre-order, consuming choices from `pick`.
template <typename ThresholdPick, typename IntervalPick>
Formula fill(const Formula& f, ThresholdPick& thr, IntervalPick& ivl) {
  switch (f.op()) {
    case Op::True:
      return f;
    case Op::Atom: {
      if (!f.atom().has_placeholder()) return f;
      Atom a = f.atom();
      a.threshold = thr(a.var);
      return Formula::atom(a);
    }
    default:
      break;
  }
  Interval iv = f.interval();
  const bool temporal = f.op() == Op::Eventually || f.op() == Op::Globally || f.op() == Op::Until;
  if (temporal && iv.is_placeholder()) iv = ivl();
  const Formula a = fill(f.lhs(), thr, ivl);
  const Formula b = f.arity() == 2 ? fill(f.rhs(), thr, ivl) : a;
  switch (f.op()) {
    case Op::Not:
      return Formula::negation(a);
    case Op::And:
      return Formula::conjunction(a, b);
    case Op::Or:
      return Formula::disjunction(a, b);
    case Op::Eventually:
      return Formula::eventually(iv, a);
    case Op::Globally:
      return Formula::globally(iv, a);
    default:
      return Formula::until(iv, a, b);
  }
}

// Placeholder slots of a template in pre-order: variable index for thresholds, -1 for intervals.
void slots(const Formula& f, std::vector<int>& out) {
  if (f.op() == Op::Atom) {
    if (f.atom().has_placeholder()) out.push_back(f.atom().var);
    return;
  }
  const bool temporal = f.op() == Op::Eventually || f.op() == Op::Globally || f.op() == Op::Until;
  if (temporal && f.interval().is_placeholder()) out.push_back(-1);
  if (f.arity() >= 1) slots(f.lhs(), out);
  if (f.arity() == 2) slots(f.rhs(), out);
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

std::vector<Formula> instantiate(const Formula& tmpl, const ParameterGrid& grid) {
  std::vector<int> s;
  slots(tmpl, s);
  std::vector<std::size_t> radix(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    radix[i] = s[i] < 0 ? grid.intervals.size() : grid.thresholds_for(s[i]).size();
    if (radix[i] == 0) throw std::invalid_argument("instantiate: empty parameter grid");
  }
  std::vector<Formula> out;
  std::vector<std::size_t> digit(s.size(), 0);
  while (true) {
    std::size_t k = 0;
    auto thr = [&](int var) { return grid.thresholds_for(var)[digit[k++]]; };
    auto ivl = [&]() { return grid.intervals[digit[k++]]; };
    out.push_back(fill(tmpl, thr, ivl));
    // odometer with the last slot varying fastest
    std::size_t i = s.size();
    while (i > 0) {
      --i;
      if (++digit[i] < radix[i]) break;
      digit[i] = 0;
      if (i == 0) return out;
    }
    if (s.empty()) return out;
  }
}

std::vector<Formula> instantiate(const Formula& tmpl, std::span<const double> thresholds,
                                 std::span<const Interval> intervals) {
  ParameterGrid grid;
  grid.thresholds.emplace_back(thresholds.begin(), thresholds.end());
  grid.intervals.assign(intervals.begin(), intervals.end());
  return instantiate(tmpl, grid);
}

ParameterGrid default_grid(std::span<const Trajectory> taus, bool pooled_channels) {
  if (taus.empty()) throw std::invalid_argument("default_grid: no trajectories");
  const int d = taus.front().channels();
  const int groups = pooled_channels ? 1 : d;
  ParameterGrid grid;
  for (int g = 0; g < groups; ++g) {
    std::vector<double> values;
    for (const Trajectory& t : taus) {
      for (int c = 0; c < d; ++c) {
        if (!pooled_channels && c != g) continue;
        const auto row = t.values.row(c);
        for (Eigen::Index j = 0; j < row.size(); ++j) values.push_back(row[j]);
      }
    }
    std::vector<double> qs;
    for (int k = 1; k <= 9; ++k) qs.push_back(quantile(values, k / 10.0));
    qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
    grid.thresholds.push_back(std::move(qs));
  }
  grid.intervals = default_intervals(taus.front().length());
  return grid;
}

std::vector<Interval> default_intervals(int length) {
  const int last = std::max(0, length - 1);
  const auto r = [](double v) { return static_cast<int>(std::floor(v + 0.5)); };
  std::vector<Interval> out;
  for (const double lo_frac : {0.0, 0.25, 0.5}) {
    for (const double w_frac : {0.1, 0.2, 0.5}) {
      Interval iv{std::min(r(lo_frac * length), last), 0};
      iv.hi = std::min(iv.lo + r(w_frac * length), last);
      if (std::find(out.begin(), out.end(), iv) == out.end()) out.push_back(iv);
    }
  }
  return out;
}

std::vector<Formula> VectorCandidateStream::next_batch(std::size_t n) {
  const std::size_t end = std::min(formulas_.size(), pos_ + n);
  std::vector<Formula> out(formulas_.begin() + static_cast<std::ptrdiff_t>(pos_),
                           formulas_.begin() + static_cast<std::ptrdiff_t>(end));
  pos_ = end;
  return out;
}

SampledCandidateStream::SampledCandidateStream(std::vector<Formula> templates, ParameterGrid grid, int max_horizon,
                                               std::uint64_t seed, std::size_t max_draws)
    : grid_(std::move(grid)), max_horizon_(max_horizon), seed_(seed), max_draws_(max_draws) {
  for (Formula& t : templates) {
    const auto n = static_cast<std::size_t>(t.node_count());
    if (tiers_.size() < n) tiers_.resize(n);
    tiers_[n - 1].push_back(std::move(t));
  }
  std::erase_if(tiers_, [](const auto& tier) { return tier.empty(); });
  if (tiers_.empty()) throw std::invalid_argument("candidate stream: no templates");
}

std::vector<Formula> SampledCandidateStream::next_batch(std::size_t n) {
  std::vector<Formula> out;
  while (out.size() < n && draws_ < max_draws_) {
    Rng rng(substream_seed(seed_, draws_++));
    const auto& tier = tiers_[rng.below(tiers_.size())];
    const Formula& tmpl = tier[rng.below(tier.size())];
    auto thr = [&](int var) {
      const auto values = grid_.thresholds_for(var);
      return values[rng.below(values.size())];
    };
    auto ivl = [&]() { return grid_.intervals[rng.below(grid_.intervals.size())]; };
    Formula f = fill(tmpl, thr, ivl);
    if (f.horizon() > max_horizon_) continue;
    if (!seen_.insert(f).second) continue;
    out.push_back(std::move(f));
  }
  return out;
}

void SelectionConfig::validate() const {
  if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0))
    throw std::invalid_argument("selection: similarity threshold must lie in (0, 1]");
  if (per_variable_count < 1 || min_total < 1 || batch_size < 1 || max_signature_trajectories < 1)
    throw std::invalid_argument("selection: counts must be >= 1");
}

int SelectionConfig::target(int channels) const { return std::max(per_variable_count * channels, min_total); }

MatX cosine_similarity(const MatX& a, const MatX& b) {
  auto normalise = [](const MatX& m) {
    MatX out = m;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double n = m.row(i).norm();
      if (n > 0.0) {
        out.row(i) /= n;
      } else {
        out.row(i).setZero();
      }
    }
    return out;
  };
  return normalise(a) * normalise(b).transpose();
}

SelectionResult select_diverse(CandidateStream& stream, double threshold, std::size_t target, std::size_t batch_size,
                               const SignatureFn& signature_of) {
  SelectionResult result;
  MatX kept;  // normalised signatures of retained formulas, one per row
  std::size_t kept_rows = 0;
  while (result.concepts.formulas.size() < target) {
    std::vector<Formula> batch = stream.next_batch(batch_size);
    if (batch.empty()) {
      result.exhausted = true;
      break;
    }
    result.candidates_seen += batch.size();
    std::stable_sort(batch.begin(), batch.end(),
                     [](const Formula& x, const Formula& y) { return x.node_count() < y.node_count(); });

    MatX sig = signature_of(batch);
    for (Eigen::Index i = 0; i < sig.rows(); ++i) {
      const double n = sig.row(i).norm();
      if (n > 0.0) {
        sig.row(i) /= n;
      } else {
        sig.row(i).setZero();
      }
    }
    if (kept.cols() != sig.cols()) kept.resize(0, sig.cols());
    const MatX against_kept = kept_rows ? MatX(sig * kept.topRows(static_cast<Eigen::Index>(kept_rows)).transpose())
                                        : MatX(sig.rows(), 0);
    const MatX within = sig * sig.transpose();
    std::vector<Eigen::Index> accepted;
    for (Eigen::Index i = 0; i < sig.rows() && result.concepts.formulas.size() < target; ++i) {
      bool ok = against_kept.cols() == 0 || against_kept.row(i).maxCoeff() < threshold;
      for (Eigen::Index j : accepted) {
        if (!ok) break;
        ok = within(i, j) < threshold;
      }
      if (!ok) continue;
      accepted.push_back(i);
      result.concepts.formulas.push_back(batch[static_cast<std::size_t>(i)]);
    }
    if (kept.rows() < static_cast<Eigen::Index>(kept_rows + accepted.size()))
      kept.conservativeResize(std::max<Eigen::Index>(2 * kept.rows(), static_cast<Eigen::Index>(kept_rows + accepted.size())),
                              sig.cols());
    for (Eigen::Index i : accepted) kept.row(static_cast<Eigen::Index>(kept_rows++)) = sig.row(i);
  }
  return result;
}

std::vector<Formula> duplicate_across_variables(std::span<const Formula> generic, int d) {
  if (d < 1) throw std::invalid_argument("duplicate_across_variables: d must be >= 1");
  std::vector<Formula> out;
  out.reserve(generic.size() * static_cast<std::size_t>(d));
  for (const Formula& f : generic) {
    const auto vars = variable_set(f);
    if (vars.size() > 1 || (vars.size() == 1 && *vars.begin() != 0))
      throw std::invalid_argument("duplicate_across_variables: formula must use only the placeholder variable x0: " +
                                  to_string(f));
    for (int v = 0; v < d; ++v) out.push_back(map_variables(f, [v](int) { return v; }));
  }
  return out;
}

SelectionResult select_concepts(CandidateStream& stream, std::span<const Trajectory> taus, const SelectionConfig& sel,
                                bool duplicate) {
  sel.validate();
  if (taus.empty()) throw std::invalid_argument("select_concepts: no trajectories");
  const int d = taus.front().channels();

  // uniform seeded subsample of the signature trajectories
  std::vector<Trajectory> pool(taus.begin(), taus.end());
  if (pool.size() > static_cast<std::size_t>(sel.max_signature_trajectories)) {
    Rng rng(substream_seed(sel.seed, 0x5e1ec7));
    rng.shuffle(pool.begin(), pool.end());
    pool.resize(static_cast<std::size_t>(sel.max_signature_trajectories));
  }

  const int total = sel.target(d);
  const std::size_t target = duplicate ? static_cast<std::size_t>((total + d - 1) / d) : static_cast<std::size_t>(total);
  const auto n = static_cast<Eigen::Index>(pool.size());

  SignatureFn sig = [&](std::span<const Formula> batch) {
    MatX out(static_cast<Eigen::Index>(batch.size()), n * (duplicate ? d : 1));
    parallel_for(batch.size(), [&](std::size_t i) {
      const auto row = static_cast<Eigen::Index>(i);
      if (!duplicate) {
        out.row(row) = robustness_row(batch[i], pool).unaryExpr(&clamp_large).transpose();
        return;
      }
      for (int v = 0; v < d; ++v) {
        const Formula f = map_variables(batch[i], [v](int) { return v; });
        out.block(row, v * n, 1, n) = robustness_row(f, pool).unaryExpr(&clamp_large).transpose();
      }
    });
    return out;
  };

  SelectionResult result = select_diverse(stream, sel.similarity_threshold, target,
                                          static_cast<std::size_t>(sel.batch_size), sig);
  result.concepts.source_length = taus.front().length();
  if (duplicate) result.concepts.formulas = duplicate_across_variables(result.concepts.formulas, d);
  return result;
}

SelectionResult generate_concepts(std::span<const Trajectory> train, const ConceptGenConfig& cfg) {
  if (train.empty()) throw std::invalid_argument("generate_concepts: empty training set");
  TemplateConfig tc = cfg.templates;
  tc.channels = train.front().channels();
  const bool dup = tc.duplicate_across_variables;
  const int length = train.front().length();
  const int d = tc.channels;
  const std::size_t wanted = static_cast<std::size_t>(cfg.selection.target(d));
  SampledCandidateStream stream(enumerate_templates(tc), default_grid(train, dup), length - 1, cfg.selection.seed,
                                cfg.draws_per_concept * wanted);
  return select_concepts(stream, train, cfg.selection, dup);
}

void save_concepts(std::ostream& os, const ConceptSet& cs) {
  os << "source_length=" << cs.source_length << '\n';
  for (const Formula& f : cs.formulas) os << to_string(f) << '\n';
}

ConceptSet load_concepts(std::istream& is) {
  ConceptSet cs;
  std::string line;
  if (!std::getline(is, line) || line.rfind("source_length=", 0) != 0)
    throw std::runtime_error("concept file: missing 'source_length=<L>' header");
  cs.source_length = std::stoi(line.substr(14));
  if (cs.source_length < 1) throw std::runtime_error("concept file: source_length must be >= 1");
  int lineno = 1;
  std::unordered_set<Formula, FormulaHash> seen;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Formula f = parse(line);
      if (seen.insert(f).second) cs.formulas.push_back(std::move(f));
    } catch (const ParseError& e) {
      throw std::runtime_error("concept file line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cs;
}

void save_concepts(const std::string& path, const ConceptSet& cs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  save_concepts(os, cs);
}

ConceptSet load_concepts(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return load_concepts(is);
}

ConceptSet rescale_concepts(const ConceptSet& cs, int length) {
  ConceptSet out;
  out.source_length = length;
  std::unordered_set<Formula, FormulaHash> seen;
  for (const Formula& f : cs.formulas) {
    Formula g = rescale_time(f, cs.source_length, length);
    if (seen.insert(g).second) out.formulas.push_back(std::move(g));
  }
  return out;
}

}  // namespace stelle
