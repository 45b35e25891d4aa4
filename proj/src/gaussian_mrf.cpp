#include "pxp/prior.hpp"

namespace pxp {

GaussianMrfPrior::GaussianMrfPrior(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0)) throw ParamError("GaussianMrfPrior: epsilon must be positive");
}

double GaussianMrfPrior::log_density(const Image& image) const {
  if (!image.finite()) throw ParamError("log_density: non-finite image entries");
  double quad = 0.0;
  for (int ch = 0; ch < image.channels; ++ch) {
    for (int r = 0; r < image.height; ++r)
      for (int c = 0; c < image.width; ++c) {
        double v = image.at(r, c, ch);
        quad += epsilon_ * v * v;
        if (c + 1 < image.width) {
          double d = image.at(r, c + 1, ch) - v;
          quad += d * d;
        }
        if (r + 1 < image.height) {
          double d = image.at(r + 1, c, ch) - v;
          quad += d * d;
        }
      }
  }
  return -0.5 * quad;
}

Image GaussianMrfPrior::grad_log_density(const Image& image) const {
  if (!image.finite()) throw ParamError("grad_log_density: non-finite image entries");
  Image g(image.height, image.width, image.channels, 0.0);
  for (int ch = 0; ch < image.channels; ++ch) {
    for (int r = 0; r < image.height; ++r)
      for (int c = 0; c < image.width; ++c) {
        double acc = epsilon_ * image.at(r, c, ch);
        if (c + 1 < image.width) acc -= image.at(r, c + 1, ch) - image.at(r, c, ch);
        if (c > 0) acc += image.at(r, c, ch) - image.at(r, c - 1, ch);
        if (r + 1 < image.height) acc -= image.at(r + 1, c, ch) - image.at(r, c, ch);
        if (r > 0) acc += image.at(r, c, ch) - image.at(r - 1, c, ch);
        g.at(r, c, ch) = -acc;
      }
  }
  return g;
}

Eigen::MatrixXd GaussianMrfPrior::dense_precision(int height, int width, double epsilon) {
  const int n = height * width;
  auto idx = [width](int r, int c) { return r * width + c; };
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n) * epsilon;
  auto add_pair = [&](int a, int b) {
    // contribution of one difference (x_b - x_a)^2 to L^T L
    q(a, a) += 1.0;
    q(b, b) += 1.0;
    q(a, b) -= 1.0;
    q(b, a) -= 1.0;
  };
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      if (c + 1 < width) add_pair(idx(r, c), idx(r, c + 1));
      if (r + 1 < height) add_pair(idx(r, c), idx(r + 1, c));
    }
  return q;
}

}  // namespace pxp
