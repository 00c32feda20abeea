#include "stelle/robustness.hpp"

#include "stelle/parallel.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace stelle {

namespace {

// Sliding extremum over windows [t+lo, min(t+hi, L-1)] for t in [0, n).
// `x` holds the child signal on [0, min(L, n+hi)).
template <bool Max>
ArrX window_extreme(const ArrX& x, int n, int lo, int hi, int length) {
  ArrX out(n);
  const double empty = Max ? -kLarge : kLarge;
  std::vector<int> dq(static_cast<std::size_t>(x.size()) + 1);
  int head = 0, tail = 0;
  int next = 0;  // next index to push
  for (int t = 0; t < n; ++t) {
    const int l = t + lo;
    const int r = std::min(t + hi, length - 1);
    if (l > r) {
      out[t] = empty;
      continue;
    }
    if (next < l) next = l;
    while (next <= r) {
      const double v = x[next];
      while (tail > head && (Max ? x[dq[tail - 1]] <= v : x[dq[tail - 1]] >= v)) --tail;
      dq[tail++] = next++;
    }
    while (dq[head] < l) ++head;
    out[t] = x[dq[head]];
  }
  return out;
}

ArrX eval(const Formula& f, const Trajectory& tau, int n) {
  const int length = tau.length();
  switch (f.op()) {
    case Op::True:
      return ArrX::Constant(n, kLarge);
    case Op::Atom: {
      const Atom& a = f.atom();
      if (a.has_placeholder()) throw std::invalid_argument("cannot evaluate a formula template");
      if (a.var >= tau.channels())
        throw std::out_of_range("atom references channel x" + std::to_string(a.var) + " but trajectory has " +
                                std::to_string(tau.channels()) + " channels");
      auto row = tau.values.row(a.var).head(n).transpose().array();
      if (a.rel == Relation::GreaterEq) return row - a.threshold;
      return a.threshold - row;
    }
    case Op::Not:
      return -eval(f.lhs(), tau, n);
    case Op::And:
      return eval(f.lhs(), tau, n).min(eval(f.rhs(), tau, n));
    case Op::Or:
      return eval(f.lhs(), tau, n).max(eval(f.rhs(), tau, n));
    default:
      break;
  }
  const Interval iv = f.interval();
  if (iv.is_placeholder()) throw std::invalid_argument("cannot evaluate a formula template");
  const int m = std::min(length, n + iv.hi);
  if (f.op() == Op::Eventually) return window_extreme<true>(eval(f.lhs(), tau, m), n, iv.lo, iv.hi, length);
  if (f.op() == Op::Globally) return window_extreme<false>(eval(f.lhs(), tau, m), n, iv.lo, iv.hi, length);

  // Until: max over t' in [t+lo, t+hi] of min(rhs(t'), min over [t, t'] of lhs)
  const ArrX a = eval(f.lhs(), tau, m);
  const ArrX b = eval(f.rhs(), tau, m);
  ArrX out(n);
  for (int t = 0; t < n; ++t) {
    const int r = std::min(t + iv.hi, length - 1);
    double best = -kLarge;
    double prefix = kLarge;
    for (int s = t; s <= r; ++s) {
      prefix = std::min(prefix, a[s]);
      if (s >= t + iv.lo) best = std::max(best, std::min(b[s], prefix));
    }
    out[t] = best;
  }
  return out;
}

}  // namespace

ArrX robustness_signal(const Formula& f, const Trajectory& tau) {
  if (tau.length() < 1) throw std::invalid_argument("trajectory must have at least one time step");
  return eval(f, tau, tau.length());
}

double robustness(const Formula& f, const Trajectory& tau, int t) {
  if (t < 0 || t >= tau.length()) throw std::out_of_range("robustness: time step outside trajectory");
  return eval(f, tau, t + 1)[t];
}

bool satisfied(const Formula& f, const Trajectory& tau, int t) { return robustness(f, tau, t) >= 0.0; }

VecX robustness_row(const Formula& f, std::span<const Trajectory> taus) {
  VecX row(static_cast<Eigen::Index>(taus.size()));
  for (std::size_t j = 0; j < taus.size(); ++j) row[static_cast<Eigen::Index>(j)] = eval(f, taus[j], 1)[0];
  return row;
}

MatX robustness_matrix(std::span<const Formula> formulas, std::span<const Trajectory> taus) {
  MatX out(static_cast<Eigen::Index>(formulas.size()), static_cast<Eigen::Index>(taus.size()));
  parallel_for(formulas.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < taus.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = eval(formulas[i], taus[j], 1)[0];
  });
  return out;
}

}  // namespace stelle
