#pragma once

#include <optional>

#include "pxp/image.hpp"

namespace pxp {

struct MetricReport {
  double psnr_db = 0.0;  // +infinity for identical images
  double ssim = 0.0;
  std::optional<double> bits_per_dim;
};

// 10*log10(1/MSE) at peak 1.0; identical images give +infinity.
double psnr(const Image& reference, const Image& estimate);

// Mean local SSIM over uniform 8x8 windows (stride 1), C1=(0.01)^2,
// C2=(0.03)^2, averaged across channels. Requires dimensions >= 8.
double ssim(const Image& reference, const Image& estimate);

// total_nll_nats / (pixel_count * ln 2).
double bits_per_dim(double total_nll_nats, long long pixel_count);

}  // namespace pxp
