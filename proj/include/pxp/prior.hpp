#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "pxp/image.hpp"

namespace pxp {

// Image prior abstraction: log-density and its gradient with respect to the
// image. Multi-channel images are scored per channel independently and the
// log-densities summed.
class PriorInterface {
 public:
  virtual ~PriorInterface() = default;

  // Native patch size for tiled gradient evaluation; 0 means the prior is
  // size-agnostic and the solver never tiles it.
  virtual int patch_size() const { return 0; }

  virtual double log_density(const Image& image) const = 0;
  virtual Image grad_log_density(const Image& image) const = 0;

  // The smooth surrogate that grad_log_density actually differentiates.
  // Identical to log_density for natively smooth priors; the AR prior
  // overrides it with the moving-bin-edge relaxation. Finite-difference
  // checks difference this function.
  virtual double log_density_relaxed(const Image& image) const { return log_density(image); }
};

// Flat distribution over the 256 intensity levels: exactly 8 bits/dim,
// zero gradient.
class UniformPrior : public PriorInterface {
 public:
  double log_density(const Image& image) const override {
    if (!image.finite()) throw ParamError("log_density: non-finite image entries");
    return -static_cast<double>(image.size()) * std::log(256.0);
  }
  Image grad_log_density(const Image& image) const override {
    if (!image.finite()) throw ParamError("grad_log_density: non-finite image entries");
    return Image(image.height, image.width, image.channels, 0.0);
  }
};

// Gaussian MRF with precision Q = eps*I + L^T L, where L stacks horizontal
// and vertical first differences. log p = -1/2 x^T Q x (constant dropped);
// gradient -Qx is evaluated with the 4-neighbour stencil.
class GaussianMrfPrior : public PriorInterface {
 public:
  explicit GaussianMrfPrior(double epsilon);

  double epsilon() const { return epsilon_; }
  double log_density(const Image& image) const override;
  Image grad_log_density(const Image& image) const override;

  // Dense N x N precision matrix for an h x w grid; used by the MAP oracle.
  static Eigen::MatrixXd dense_precision(int height, int width, double epsilon);

 private:
  double epsilon_;
};

}  // namespace pxp
