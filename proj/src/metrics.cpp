#include "pxp/metrics.hpp"

#include <cmath>
#include <limits>

namespace pxp {

double psnr(const Image& reference, const Image& estimate) {
  require_same_shape(reference, estimate, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < reference.data.size(); ++i) {
    double d = reference.data[i] - estimate.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(reference.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& reference, const Image& estimate) {
  require_same_shape(reference, estimate, "ssim");
  constexpr int kWin = 8;
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  if (reference.height < kWin || reference.width < kWin)
    throw ParamError("ssim: image smaller than the 8x8 window");
  const double wn = static_cast<double>(kWin) * kWin;
  double channel_sum = 0.0;
  for (int ch = 0; ch < reference.channels; ++ch) {
    double acc = 0.0;
    long long windows = 0;
    for (int r0 = 0; r0 + kWin <= reference.height; ++r0)
      for (int c0 = 0; c0 + kWin <= reference.width; ++c0) {
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (int r = r0; r < r0 + kWin; ++r)
          for (int c = c0; c < c0 + kWin; ++c) {
            double x = reference.at(r, c, ch), y = estimate.at(r, c, ch);
            sx += x; sy += y;
            sxx += x * x; syy += y * y; sxy += x * y;
          }
        double mx = sx / wn, my = sy / wn;
        double vx = sxx / wn - mx * mx;
        double vy = syy / wn - my * my;
        double cov = sxy / wn - mx * my;
        acc += ((2.0 * mx * my + kC1) * (2.0 * cov + kC2)) /
               ((mx * mx + my * my + kC1) * (vx + vy + kC2));
        ++windows;
      }
    channel_sum += acc / static_cast<double>(windows);
  }
  return channel_sum / reference.channels;
}

double bits_per_dim(double total_nll_nats, long long pixel_count) {
  if (pixel_count <= 0) throw ParamError("bits_per_dim: pixel count must be positive");
  return total_nll_nats / (static_cast<double>(pixel_count) * std::log(2.0));
}

}  // namespace pxp
