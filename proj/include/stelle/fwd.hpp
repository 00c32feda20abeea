#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace stelle {

template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;
template <typename T>
using VecRef = Eigen::Ref<const Vec<T>>;
template <typename T>
using MatRef = Eigen::Ref<const Mat<T>>;

using Scalar = double;
using VecX = Vec<Scalar>;
using MatX = Mat<Scalar>;
using ArrX = Arr<Scalar>;

/// Surrogate for +/- infinity in robustness values (empty temporal windows, True).
inline constexpr Scalar kLarge = 1e9;

inline Scalar clamp_large(Scalar v) {
  return v > kLarge ? kLarge : (v < -kLarge ? -kLarge : v);
}

}  // namespace stelle
