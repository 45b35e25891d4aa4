#include "pxp/problem.hpp"

#include <cmath>

namespace pxp {

namespace {

Eigen::VectorXd raster(const Image& image, int ch) {
  Eigen::VectorXd v(image.pixels());
  int i = 0;
  for (int r = 0; r < image.height; ++r)
    for (int c = 0; c < image.width; ++c) v(i++) = image.at(r, c, ch);
  return v;
}

}  // namespace

Problem make_inpaint_problem(const MaskOperator& mask, const MeasurementSet& y, int channels) {
  Problem p{mask, y, mask.height, mask.width, channels};
  if (y.channels() != channels) throw ParamError("inpaint problem: channel count mismatch");
  return p;
}

Problem make_spc_problem(const DenseSensingOperator& op, const MeasurementSet& y, int height,
                         int width, int channels) {
  if (op.cols() != height * width) throw ParamError("spc problem: operator/shape mismatch");
  if (y.channels() != channels) throw ParamError("spc problem: channel count mismatch");
  return Problem{op, y, height, width, channels};
}

Problem make_lisens_problem(const RowSensingOperator& op, const MeasurementSet& y, int width,
                            int channels) {
  if (y.channels() != channels) throw ParamError("lisens problem: channel count mismatch");
  return Problem{op, y, op.cols(), width, channels};
}

Problem make_flatcam_problem(const SeparableOperator& op, const MeasurementSet& y, int channels) {
  if (y.channels() != channels) throw ParamError("flatcam problem: channel count mismatch");
  return Problem{op, y, static_cast<int>(op.left.cols()), static_cast<int>(op.right.cols()),
                 channels};
}

MeasurementSet problem_forward(const Problem& problem, const Image& x) {
  return std::visit(
      [&](const auto& op) -> MeasurementSet {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, MaskOperator>) return apply_mask(x, op);
        else if constexpr (std::is_same_v<T, DenseSensingOperator>) return spc_forward(op, x);
        else if constexpr (std::is_same_v<T, RowSensingOperator>) return lisens_forward(op, x);
        else return flatcam_forward(op, x);
      },
      problem.op);
}

double problem_residual(const Problem& problem, const Image& x) {
  MeasurementSet ax = problem_forward(problem, x);
  double num = 0.0;
  for (int ch = 0; ch < problem.y.channels(); ++ch)
    num += (problem.y.per_channel[static_cast<std::size_t>(ch)] -
            ax.per_channel[static_cast<std::size_t>(ch)])
               .squaredNorm();
  return std::sqrt(num) / std::max(problem.y.norm(), 1e-12);
}

Image problem_adjoint_residual(const Problem& problem, const Image& x) {
  Image out(problem.height, problem.width, problem.channels, 0.0);
  MeasurementSet ax = problem_forward(problem, x);
  for (int ch = 0; ch < problem.channels; ++ch) {
    Eigen::MatrixXd r = problem.y.per_channel[static_cast<std::size_t>(ch)] -
                        ax.per_channel[static_cast<std::size_t>(ch)];
    std::visit(
        [&](const auto& op) {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, MaskOperator>) {
            for (int rr = 0; rr < problem.height; ++rr)
              for (int cc = 0; cc < problem.width; ++cc)
                if (op.at(rr, cc) != 0.0) out.at(rr, cc, ch) = r(rr, cc);
          } else if constexpr (std::is_same_v<T, DenseSensingOperator>) {
            Eigen::VectorXd g = op.matrix.transpose() * r.col(0);
            int i = 0;
            for (int rr = 0; rr < problem.height; ++rr)
              for (int cc = 0; cc < problem.width; ++cc) out.at(rr, cc, ch) = g(i++);
          } else if constexpr (std::is_same_v<T, RowSensingOperator>) {
            out.plane(ch) = op.matrix.transpose() * r;
          } else {
            out.plane(ch) = op.left.transpose() * r * op.right;
          }
        },
        problem.op);
  }
  return out;
}

Eigen::MatrixXd problem_dense_matrix(const Problem& problem) {
  const int n = problem.height * problem.width;
  return std::visit(
      [&](const auto& op) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, MaskOperator>) {
          int rows = n - op.zeros();
          Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, n);
          int row = 0;
          for (int i = 0; i < n; ++i)
            if (op.mask[static_cast<std::size_t>(i)] != 0.0) a(row++, i) = 1.0;
          return a;
        } else if constexpr (std::is_same_v<T, DenseSensingOperator>) {
          return op.matrix;
        } else if constexpr (std::is_same_v<T, RowSensingOperator>) {
          const int m = op.rows(), w = problem.width, h = problem.height;
          Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m * w, h * w);
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < w; ++j)
              for (int r = 0; r < h; ++r) a(i * w + j, r * w + j) = op.matrix(i, r);
          return a;
        } else {
          const int ml = static_cast<int>(op.left.rows());
          const int mr = static_cast<int>(op.right.rows());
          const int h = problem.height, w = problem.width;
          Eigen::MatrixXd a = Eigen::MatrixXd::Zero(ml * mr, h * w);
          for (int i = 0; i < ml; ++i)
            for (int j = 0; j < mr; ++j)
              for (int r = 0; r < h; ++r)
                for (int c = 0; c < w; ++c) a(i * mr + j, r * w + c) = op.left(i, r) * op.right(j, c);
          return a;
        }
      },
      problem.op);
}

Eigen::VectorXd problem_measurement_vector(const Problem& problem, int channel) {
  const Eigen::MatrixXd& yc = problem.y.per_channel.at(static_cast<std::size_t>(channel));
  return std::visit(
      [&](const auto& op) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, MaskOperator>) {
          Eigen::VectorXd v(problem.height * problem.width - op.zeros());
          int i = 0;
          for (int r = 0; r < problem.height; ++r)
            for (int c = 0; c < problem.width; ++c)
              if (op.at(r, c) != 0.0) v(i++) = yc(r, c);
          return v;
        } else {
          Eigen::VectorXd v(yc.size());
          int i = 0;
          for (int r = 0; r < yc.rows(); ++r)
            for (int c = 0; c < yc.cols(); ++c) v(i++) = yc(r, c);
          return v;
        }
      },
      problem.op);
}

}  // namespace pxp
