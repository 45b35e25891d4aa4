#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "pxp/errors.hpp"

namespace pxp {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRowMat = Eigen::Map<RowMat>;
using ConstMapRowMat = Eigen::Map<const RowMat>;

// 2-D intensity grid, optionally multi-channel, nominal range [0,1].
// Storage is channel-planar: data[c*h*w + r*w + col], each plane row-major,
// which is also the rasterization order used when an image is vectorized.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c = 1, double fill = 0.0);

  int pixels() const { return height * width; }
  std::size_t size() const { return data.size(); }

  double& at(int r, int c, int ch = 0) {
    return data[static_cast<std::size_t>(ch) * pixels() + static_cast<std::size_t>(r) * width + c];
  }
  double at(int r, int c, int ch = 0) const {
    return data[static_cast<std::size_t>(ch) * pixels() + static_cast<std::size_t>(r) * width + c];
  }

  // Row-major view of one channel plane.
  MapRowMat plane(int ch);
  ConstMapRowMat plane(int ch) const;

  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  bool finite() const;
};

void require_same_shape(const Image& a, const Image& b, const char* what);

// Elementwise min(max(v,0),1); idempotent.
Image clip_unit(Image image);

}  // namespace pxp
