#include "pxp/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pxp {

Image::Image(int h, int w, int c, double fill) : height(h), width(w), channels(c) {
  if (h <= 0 || w <= 0 || c <= 0)
    throw ParamError("image dimensions must be positive");
  data.assign(static_cast<std::size_t>(h) * w * c, fill);
}

MapRowMat Image::plane(int ch) {
  return MapRowMat(data.data() + static_cast<std::size_t>(ch) * pixels(), height, width);
}

ConstMapRowMat Image::plane(int ch) const {
  return ConstMapRowMat(data.data() + static_cast<std::size_t>(ch) * pixels(), height, width);
}

bool Image::finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b))
    throw ParamError(std::string(what) + ": shape mismatch (" + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + "x" + std::to_string(a.channels) + " vs " +
                     std::to_string(b.height) + "x" + std::to_string(b.width) + "x" +
                     std::to_string(b.channels) + ")");
}

Image clip_unit(Image image) {
  for (double& v : image.data) v = std::clamp(v, 0.0, 1.0);
  return image;
}

}  // namespace pxp
