#pragma once

#include "stelle/formula.hpp"
#include "stelle/fwd.hpp"
#include "stelle/trajectory.hpp"

#include <span>

namespace stelle {

/// Quantitative semantics over discrete time with unit steps and inclusive windows.
/// Windows are clipped to [0, L-1]; an empty window yields -kLarge for F/U and +kLarge for G.
/// True evaluates to +kLarge.
///
/// Returns rho(f, tau, t) for every t in [0, L-1].
ArrX robustness_signal(const Formula& f, const Trajectory& tau);

double robustness(const Formula& f, const Trajectory& tau, int t = 0);
bool satisfied(const Formula& f, const Trajectory& tau, int t = 0);

/// rho(f_i, tau_j, 0) for every pair; rows follow `formulas`, columns follow `taus`.
MatX robustness_matrix(std::span<const Formula> formulas, std::span<const Trajectory> taus);

/// rho(f, tau_j, 0) for every trajectory.
VecX robustness_row(const Formula& f, std::span<const Trajectory> taus);

}  // namespace stelle
