#pragma once

#include <Eigen/Dense>

namespace latval {

// Dense real vector: coalition worths, dividends, per-player allocations.
using Vector = Eigen::VectorXd;

// Elementwise array: probability mass over discrete state spaces.
using Array = Eigen::ArrayXd;

}  // namespace latval
