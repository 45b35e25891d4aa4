#pragma once

#include <Eigen/Dense>

#include "pxp/errors.hpp"

namespace pxp {

// Per-pixel conditional: K-component mixture of discretized logistics.
// Intensities live at bin centers v/255 with half-width 1/510; the edge bins
// v=0 and v=255 absorb the CDF tails.
struct MixtureParams {
  Eigen::ArrayXd logits;      // K, unnormalized mixture weights
  Eigen::ArrayXd means;       // K
  Eigen::ArrayXd log_scales;  // K, clamped to >= log(1e-7) at use

  int components() const { return static_cast<int>(logits.size()); }
};

inline constexpr double kBinHalfWidth = 1.0 / 510.0;
inline constexpr double kProbFloor = 1e-12;
inline constexpr double kLogScaleFloor = -16.11809565095832;  // log(1e-7)

// log P(value) for an integer level in [0,255].
double discretized_logistic_logprob(const MixtureParams& params, int value);

// Joint value/gradient evaluation. In discrete mode (value >= 0) the bin is
// fixed by the level and d_x is not populated. In relaxed mode (value < 0)
// the bin edges x +- 1/510 move with the continuous intensity x, which is
// what grad_log_density differentiates; the low/high tail branches engage
// for x < 1/510 and x > 1 - 1/510.
struct LogisticEval {
  double log_prob = 0.0;
  double d_x = 0.0;           // relaxed mode only
  Eigen::ArrayXd d_logits;
  Eigen::ArrayXd d_means;
  Eigen::ArrayXd d_log_scales;
};

LogisticEval discretized_logistic_eval(const MixtureParams& params, double x, int value,
                                       bool with_grads);

}  // namespace pxp
