#pragma once

#include "stelle/formula.hpp"
#include "stelle/fwd.hpp"
#include "stelle/mu0.hpp"
#include "stelle/rng.hpp"
#include "stelle/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace stelle::test {

/// Nested-loop evaluation straight from the recursive definition, one full signal per node.
inline std::vector<double> naive_signal(const Formula& f, const Trajectory& tau) {
  const int L = tau.length();
  std::vector<double> out(static_cast<std::size_t>(L));
  const auto at = [](const std::vector<double>& v, int s) { return v[static_cast<std::size_t>(s)]; };
  switch (f.op()) {
    case Op::True:
      std::fill(out.begin(), out.end(), 1e9);
      return out;
    case Op::Atom: {
      const Atom& a = f.atom();
      for (int t = 0; t < L; ++t) {
        const double x = tau.values(a.var, t);
        out[static_cast<std::size_t>(t)] = a.rel == Relation::GreaterEq ? x - a.threshold : a.threshold - x;
      }
      return out;
    }
    default:
      break;
  }
  const std::vector<double> l = naive_signal(f.lhs(), tau);
  const std::vector<double> r = f.arity() == 2 ? naive_signal(f.rhs(), tau) : l;
  for (int t = 0; t < L; ++t) {
    double v = 0.0;
    switch (f.op()) {
      case Op::Not:
        v = -at(l, t);
        break;
      case Op::And:
        v = std::min(at(l, t), at(r, t));
        break;
      case Op::Or:
        v = std::max(at(l, t), at(r, t));
        break;
      case Op::Eventually:
        v = -1e9;
        for (int s = t + f.interval().lo; s <= std::min(t + f.interval().hi, L - 1); ++s) v = std::max(v, at(l, s));
        break;
      case Op::Globally:
        v = 1e9;
        for (int s = t + f.interval().lo; s <= std::min(t + f.interval().hi, L - 1); ++s) v = std::min(v, at(l, s));
        break;
      case Op::Until:
        v = -1e9;
        for (int s = t + f.interval().lo; s <= std::min(t + f.interval().hi, L - 1); ++s) {
          double inner = 1e9;
          for (int u = t; u <= s; ++u) inner = std::min(inner, at(l, u));
          v = std::max(v, std::min(at(r, s), inner));
        }
        break;
      default:
        break;
    }
    out[static_cast<std::size_t>(t)] = v;
  }
  return out;
}

inline double naive_rho(const Formula& f, const Trajectory& tau, int t = 0) {
  return naive_signal(f, tau)[static_cast<std::size_t>(t)];
}

struct RandomFormulaOptions {
  int max_nodes = 7;
  int vars = 2;
  int length = 20;
  bool allow_not = true;
  bool allow_true = false;
  bool allow_until = true;
  double threshold_scale = 1.5;
};

inline Interval random_interval(Rng& rng, int length) {
  const int lo = static_cast<int>(rng.below(static_cast<std::uint64_t>(length / 2)));
  const int hi = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(length / 2)));
  return {lo, hi};
}

inline Formula random_atom(Rng& rng, const RandomFormulaOptions& o) {
  const int var = static_cast<int>(rng.below(static_cast<std::uint64_t>(o.vars)));
  const Relation rel = rng.bernoulli(0.5) ? Relation::GreaterEq : Relation::LessEq;
  // quarter-step grid keeps ties between robustness values likely
  const double c = std::round(rng.uniform(-o.threshold_scale, o.threshold_scale) * 4.0) / 4.0;
  return Formula::atom(var, rel, c);
}

/// Random formula with exactly `nodes` nodes.
inline Formula random_formula_sized(Rng& rng, int nodes, const RandomFormulaOptions& o) {
  if (nodes == 1) return o.allow_true && rng.bernoulli(0.05) ? Formula::truth() : random_atom(rng, o);
  const bool binary_ok = nodes >= 3;
  const int kinds = o.allow_not ? 3 : 2;
  const bool unary = !binary_ok || rng.bernoulli(0.5);
  if (unary) {
    const Formula c = random_formula_sized(rng, nodes - 1, o);
    switch (rng.below(static_cast<std::uint64_t>(kinds))) {
      case 0:
        return Formula::eventually(random_interval(rng, o.length), c);
      case 1:
        return Formula::globally(random_interval(rng, o.length), c);
      default:
        return Formula::negation(c);
    }
  }
  const int left = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(nodes - 2)));
  const Formula a = random_formula_sized(rng, left, o);
  const Formula b = random_formula_sized(rng, nodes - 1 - left, o);
  switch (rng.below(o.allow_until ? 3 : 2)) {
    case 0:
      return Formula::conjunction(a, b);
    case 1:
      return Formula::disjunction(a, b);
    default:
      return Formula::until(random_interval(rng, o.length), a, b);
  }
}

inline Formula random_formula(Rng& rng, const RandomFormulaOptions& o) {
  const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(o.max_nodes)));
  return random_formula_sized(rng, n, o);
}

/// mu0 trajectories of the given shape.
inline std::vector<Trajectory> mu0_trajectories(int count, int channels, int length, std::uint64_t seed) {
  Mu0Params p;
  p.b = length - 1;
  p.seed = seed;
  return sample_mu0(p, count, channels);
}

inline Trajectory make_trajectory(std::initializer_list<std::initializer_list<double>> rows) {
  Trajectory t;
  const auto d = static_cast<Eigen::Index>(rows.size());
  const auto L = static_cast<Eigen::Index>(rows.begin()->size());
  t.values.resize(d, L);
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) t.values(i, j++) = v;
    ++i;
  }
  return t;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace stelle::test
