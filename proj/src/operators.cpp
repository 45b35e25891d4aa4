#include "pxp/operators.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "pxp/io.hpp"
#include "pxp/rng.hpp"

namespace pxp {

int MaskOperator::zeros() const {
  int n = 0;
  for (double v : mask)
    if (v == 0.0) ++n;
  return n;
}

double MeasurementSet::norm() const {
  double s = 0.0;
  for (const auto& m : per_channel) s += m.squaredNorm();
  return std::sqrt(s);
}

MaskOperator make_mask(int height, int width, double missing_fraction, std::uint64_t rng_seed) {
  if (height <= 0 || width <= 0) throw ParamError("mask dimensions must be positive");
  if (!(missing_fraction >= 0.0 && missing_fraction <= 1.0))
    throw ParamError("missing_fraction must lie in [0,1]");
  const std::size_t n = static_cast<std::size_t>(height) * width;
  const std::size_t zeros =
      static_cast<std::size_t>(std::llround(missing_fraction * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(rng_seed);
  rng.shuffle(idx);
  MaskOperator m;
  m.height = height;
  m.width = width;
  m.mask.assign(n, 1.0);
  for (std::size_t i = 0; i < zeros; ++i) m.mask[idx[i]] = 0.0;
  return m;
}

Eigen::MatrixXd orthonormalize_rows(const Eigen::MatrixXd& m) {
  if (m.rows() > m.cols()) throw ParamError("cannot orthonormalize more rows than columns");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m.transpose());
  Eigen::MatrixXd thin_q =
      qr.householderQ() * Eigen::MatrixXd::Identity(m.cols(), m.rows());
  return thin_q.transpose();
}

namespace {

Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd g(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) g(r, c) = rng.normal();
  return g;
}

}  // namespace

DenseSensingOperator make_spc_operator(int measurements, int pixel_count, std::uint64_t rng_seed) {
  if (measurements <= 0 || pixel_count <= 0) throw ParamError("operator sizes must be positive");
  if (measurements > pixel_count)
    throw ParamError("measurement count exceeds pixel count");
  DenseSensingOperator op;
  op.matrix = orthonormalize_rows(gaussian_matrix(measurements, pixel_count, rng_seed));
  op.row_orthonormal = true;
  return op;
}

RowSensingOperator make_lisens_operator(int measurements, int image_height, std::uint64_t rng_seed) {
  if (measurements <= 0 || image_height <= 0) throw ParamError("operator sizes must be positive");
  if (measurements > image_height)
    throw ParamError("measurement count exceeds image height");
  RowSensingOperator op;
  op.matrix = orthonormalize_rows(gaussian_matrix(measurements, image_height, rng_seed));
  op.row_orthonormal = true;
  return op;
}

SeparableOperator make_flatcam_operator(int measurements, int image_size, std::uint64_t rng_seed) {
  if (measurements <= 0 || image_size <= 0) throw ParamError("operator sizes must be positive");
  if (measurements > image_size) throw ParamError("measurement count exceeds image size");
  auto cyclic = [&](std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> base(static_cast<std::size_t>(image_size));
    const double scale = 1.0 / std::sqrt(static_cast<double>(image_size));
    for (auto& v : base) v = rng.uniform01() < 0.5 ? -scale : scale;
    Eigen::MatrixXd m(measurements, image_size);
    for (int r = 0; r < measurements; ++r)
      for (int c = 0; c < image_size; ++c) m(r, c) = base[static_cast<std::size_t>((c + r) % image_size)];
    return m;
  };
  SeparableOperator op;
  op.left = cyclic(derive_seed(rng_seed, 0));
  op.right = cyclic(derive_seed(rng_seed, 1));
  return op;
}

// --------------------------------------------------------------- forwards

MeasurementSet apply_mask(const Image& image, const MaskOperator& mask) {
  if (image.height != mask.height || image.width != mask.width)
    throw ParamError("apply_mask: image and mask shapes differ");
  MeasurementSet y;
  y.layout = MeasurementLayout::matrix;
  y.per_channel.reserve(static_cast<std::size_t>(image.channels));
  for (int ch = 0; ch < image.channels; ++ch) {
    Eigen::MatrixXd m(image.height, image.width);
    for (int r = 0; r < image.height; ++r)
      for (int c = 0; c < image.width; ++c) m(r, c) = mask.at(r, c) * image.at(r, c, ch);
    y.per_channel.push_back(std::move(m));
  }
  return y;
}

namespace {

// Rasterized (row-major) view of one channel as a column vector.
Eigen::VectorXd raster(const Image& image, int ch) {
  Eigen::VectorXd v(image.pixels());
  int i = 0;
  for (int r = 0; r < image.height; ++r)
    for (int c = 0; c < image.width; ++c) v(i++) = image.at(r, c, ch);
  return v;
}

void unraster_into(const Eigen::VectorXd& v, Image& image, int ch) {
  int i = 0;
  for (int r = 0; r < image.height; ++r)
    for (int c = 0; c < image.width; ++c) image.at(r, c, ch) = v(i++);
}

}  // namespace

MeasurementSet spc_forward(const DenseSensingOperator& op, const Image& image) {
  if (op.cols() != image.pixels())
    throw ParamError("spc_forward: operator expects " + std::to_string(op.cols()) +
                     " pixels, image has " + std::to_string(image.pixels()));
  MeasurementSet y;
  y.layout = MeasurementLayout::vector;
  for (int ch = 0; ch < image.channels; ++ch)
    y.per_channel.push_back(op.matrix * raster(image, ch));
  return y;
}

MeasurementSet lisens_forward(const RowSensingOperator& op, const Image& image) {
  if (op.cols() != image.height)
    throw ParamError("lisens_forward: operator expects image height " + std::to_string(op.cols()));
  MeasurementSet y;
  y.layout = MeasurementLayout::matrix;
  for (int ch = 0; ch < image.channels; ++ch)
    y.per_channel.push_back(op.matrix * image.plane(ch));
  return y;
}

MeasurementSet flatcam_forward(const SeparableOperator& op, const Image& image) {
  if (op.left.cols() != image.height || op.right.cols() != image.width)
    throw ParamError("flatcam_forward: operator factors do not match image shape");
  MeasurementSet y;
  y.layout = MeasurementLayout::matrix;
  for (int ch = 0; ch < image.channels; ++ch)
    y.per_channel.push_back(op.left * image.plane(ch) * op.right.transpose());
  return y;
}

// ------------------------------------------------------------- projections

Image project_inpaint(const Image& h, const MaskOperator& mask, const MeasurementSet& y) {
  if (h.height != mask.height || h.width != mask.width)
    throw ParamError("project_inpaint: image and mask shapes differ");
  if (y.channels() != h.channels) throw ParamError("project_inpaint: channel count mismatch");
  Image j = h;
  for (int ch = 0; ch < h.channels; ++ch) {
    const Eigen::MatrixXd& obs = y.per_channel[static_cast<std::size_t>(ch)];
    if (obs.rows() != h.height || obs.cols() != h.width)
      throw ParamError("project_inpaint: measurement shape mismatch");
    for (int r = 0; r < h.height; ++r)
      for (int c = 0; c < h.width; ++c)
        if (mask.at(r, c) != 0.0) j.at(r, c, ch) = obs(r, c);
  }
  return j;
}

Image project_spc(const Image& h, const DenseSensingOperator& op, const MeasurementSet& y) {
  if (!op.row_orthonormal)
    throw ParamError("project_spc requires a row-orthonormal operator; use the soft solver otherwise");
  if (op.cols() != h.pixels()) throw ParamError("project_spc: operator/image size mismatch");
  if (y.channels() != h.channels) throw ParamError("project_spc: channel count mismatch");
  Image j = h;
  for (int ch = 0; ch < h.channels; ++ch) {
    const Eigen::MatrixXd& yc = y.per_channel[static_cast<std::size_t>(ch)];
    if (yc.rows() != op.rows() || yc.cols() != 1)
      throw ParamError("project_spc: measurement shape mismatch");
    Eigen::VectorXd hv = raster(h, ch);
    Eigen::VectorXd jv = hv - op.matrix.transpose() * (op.matrix * hv - yc.col(0));
    unraster_into(jv, j, ch);
  }
  return j;
}

Image project_lisens(const Image& h, const RowSensingOperator& op, const MeasurementSet& y) {
  if (!op.row_orthonormal)
    throw ParamError("project_lisens requires a row-orthonormal operator; use the soft solver otherwise");
  if (op.cols() != h.height) throw ParamError("project_lisens: operator/image size mismatch");
  if (y.channels() != h.channels) throw ParamError("project_lisens: channel count mismatch");
  Image j = h;
  for (int ch = 0; ch < h.channels; ++ch) {
    const Eigen::MatrixXd& yc = y.per_channel[static_cast<std::size_t>(ch)];
    if (yc.rows() != op.rows() || yc.cols() != h.width)
      throw ParamError("project_lisens: measurement shape mismatch");
    Eigen::MatrixXd hm = h.plane(ch);
    Eigen::MatrixXd jm = hm - op.matrix.transpose() * (op.matrix * hm - yc);
    j.plane(ch) = jm;
  }
  return j;
}

// ------------------------------------------------------------ calibration

SeparableOperator load_calibration(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open calibration file: " + path);
  SeparableOperator op;
  op.left = read_pxp1(is);
  op.right = read_pxp1(is);
  if (!op.left.allFinite() || !op.right.allFinite())
    throw FormatError("calibration matrices contain non-finite entries");
  return op;
}

void save_calibration(const std::string& path, const SeparableOperator& op) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open calibration file for writing: " + path);
  write_pxp1(os, op.left);
  write_pxp1(os, op.right);
}

}  // namespace pxp
