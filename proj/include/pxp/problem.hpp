#pragma once

#include <variant>

#include "pxp/operators.hpp"

namespace pxp {

// One inverse problem instance: the forward operator, the measurements and
// the unknown image's shape. Channels share the operator; measurements are
// stored per channel.
struct Problem {
  std::variant<MaskOperator, DenseSensingOperator, RowSensingOperator, SeparableOperator> op;
  MeasurementSet y;
  int height = 0;
  int width = 0;
  int channels = 1;
};

Problem make_inpaint_problem(const MaskOperator& mask, const MeasurementSet& y, int channels = 1);
Problem make_spc_problem(const DenseSensingOperator& op, const MeasurementSet& y, int height,
                         int width, int channels = 1);
Problem make_lisens_problem(const RowSensingOperator& op, const MeasurementSet& y, int width,
                            int channels = 1);
Problem make_flatcam_problem(const SeparableOperator& op, const MeasurementSet& y, int channels = 1);

MeasurementSet problem_forward(const Problem& problem, const Image& x);

// ||y - A x|| / max(||y||, 1e-12), accumulated over channels.
double problem_residual(const Problem& problem, const Image& x);

// A^T (y - A x), reshaped to the image grid; the soft-constraint ascent
// direction on the likelihood term.
Image problem_adjoint_residual(const Problem& problem, const Image& x);

// Dense matrix acting on the rasterized image (per channel); inpainting
// contributes one selector row per observed pixel. For oracles and tests.
Eigen::MatrixXd problem_dense_matrix(const Problem& problem);

// Measurements of one channel as a vector in the dense-matrix row order.
Eigen::VectorXd problem_measurement_vector(const Problem& problem, int channel);

}  // namespace pxp
