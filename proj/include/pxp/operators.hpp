#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pxp/image.hpp"

namespace pxp {

// Binary inpainting mask, shared across channels. 1 = observed, 0 = missing.
struct MaskOperator {
  int height = 0;
  int width = 0;
  std::vector<double> mask;  // row-major, values in {0,1}

  double at(int r, int c) const { return mask[static_cast<std::size_t>(r) * width + c]; }
  int zeros() const;
};

// Dense m x n^2 sensing matrix acting on the rasterized image.
struct DenseSensingOperator {
  Eigen::MatrixXd matrix;
  bool row_orthonormal = false;

  int rows() const { return static_cast<int>(matrix.rows()); }
  int cols() const { return static_cast<int>(matrix.cols()); }
};

// m x n row multiplexer: Y = Phi X.
struct RowSensingOperator {
  Eigen::MatrixXd matrix;
  bool row_orthonormal = false;

  int rows() const { return static_cast<int>(matrix.rows()); }
  int cols() const { return static_cast<int>(matrix.cols()); }
};

// Separable pair: Y = L X R^T. left.cols() = image height, right.cols() = width.
struct SeparableOperator {
  Eigen::MatrixXd left;
  Eigen::MatrixXd right;
};

enum class MeasurementLayout { vector, matrix };

// Measurements for one image; one entry per channel. Vector measurements are
// stored as m x 1 matrices.
struct MeasurementSet {
  MeasurementLayout layout = MeasurementLayout::vector;
  std::vector<Eigen::MatrixXd> per_channel;

  int channels() const { return static_cast<int>(per_channel.size()); }
  double norm() const;
};

// --------------------------------------------------------------- builders

// Exact-count mask: round(missing_fraction * h * w) zeros at uniformly random
// positions, deterministic per seed.
MaskOperator make_mask(int height, int width, double missing_fraction, std::uint64_t rng_seed);

// Orthonormalizes the rows of a (rows <= cols) matrix; rows span the same
// space as the input rows.
Eigen::MatrixXd orthonormalize_rows(const Eigen::MatrixXd& m);

// i.i.d. Gaussian rows, then row-orthonormalization.
DenseSensingOperator make_spc_operator(int measurements, int pixel_count, std::uint64_t rng_seed);
RowSensingOperator make_lisens_operator(int measurements, int image_height, std::uint64_t rng_seed);

// Desk-scale separable mask simulation: each factor is m cyclic shifts of a
// +-1 pseudo-random sequence scaled by 1/sqrt(n). Not row-orthonormal in
// general; conditioning is the ALM solver's problem.
SeparableOperator make_flatcam_operator(int measurements, int image_size, std::uint64_t rng_seed);

// --------------------------------------------------------------- forwards

MeasurementSet apply_mask(const Image& image, const MaskOperator& mask);
MeasurementSet spc_forward(const DenseSensingOperator& op, const Image& image);
MeasurementSet lisens_forward(const RowSensingOperator& op, const Image& image);
MeasurementSet flatcam_forward(const SeparableOperator& op, const Image& image);

// ------------------------------------------------------------- projections

Image project_inpaint(const Image& h, const MaskOperator& mask, const MeasurementSet& y);
Image project_spc(const Image& h, const DenseSensingOperator& op, const MeasurementSet& y);
Image project_lisens(const Image& h, const RowSensingOperator& op, const MeasurementSet& y);

// ------------------------------------------------------------ calibration

// Calibration file: two consecutive matrix-container sections, left then
// right. Rejects non-finite entries.
SeparableOperator load_calibration(const std::string& path);
void save_calibration(const std::string& path, const SeparableOperator& op);

}  // namespace pxp
