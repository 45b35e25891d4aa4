#pragma once

#include "pxp/prior.hpp"
#include "pxp/problem.hpp"

namespace pxp {

enum class OracleMode { hard, soft };

// Closed-form Gaussian-MRF MAP solve, per channel.
//   hard: argmin x^T Q x  s.t.  A x = y   (dense KKT system)
//   soft: argmin 1/2 x^T Q x + soft_weight * ||y - A x||^2
// Limited to <= 1024 unknowns; verifies the linear-solve residual to 1e-10.
Image gaussian_mrf_map_oracle(const Problem& problem, OracleMode mode, double soft_weight,
                              const GaussianMrfPrior& prior);

}  // namespace pxp
