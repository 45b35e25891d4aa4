#include "pxp/oracle.hpp"

#include <cmath>
#include <string>

namespace pxp {

Image gaussian_mrf_map_oracle(const Problem& problem, OracleMode mode, double soft_weight,
                              const GaussianMrfPrior& prior) {
  const int n = problem.height * problem.width;
  if (n > 1024) throw ParamError("oracle limited to 1024 unknowns, got " + std::to_string(n));
  if (mode == OracleMode::soft && !(soft_weight > 0.0))
    throw ParamError("oracle soft mode needs a positive weight");

  Eigen::MatrixXd q = GaussianMrfPrior::dense_precision(problem.height, problem.width,
                                                        prior.epsilon());
  Eigen::MatrixXd a = problem_dense_matrix(problem);
  Image out(problem.height, problem.width, problem.channels, 0.0);

  for (int ch = 0; ch < problem.channels; ++ch) {
    Eigen::VectorXd y = problem_measurement_vector(problem, ch);
    Eigen::VectorXd x;
    if (mode == OracleMode::hard) {
      const int m = static_cast<int>(a.rows());
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
      kkt.topLeftCorner(n, n) = q;
      kkt.topRightCorner(n, m) = a.transpose();
      kkt.bottomLeftCorner(m, n) = a;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
      rhs.tail(m) = y;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
      if (!lu.isInvertible()) {
        auto piv = lu.matrixLU().diagonal().array().abs();
        throw NumericError("singular KKT system (rank " + std::to_string(lu.rank()) + " of " +
                           std::to_string(n + m) + ", pivot ratio " +
                           std::to_string(piv.maxCoeff() / std::max(piv.minCoeff(), 1e-300)) + ")");
      }
      Eigen::VectorXd z = lu.solve(rhs);
      double rel = (kkt * z - rhs).norm() / std::max(rhs.norm(), 1e-12);
      if (rel > 1e-10)
        throw NumericError("KKT solve residual " + std::to_string(rel) + " exceeds 1e-10");
      x = z.head(n);
    } else {
      Eigen::MatrixXd mmat = q + 2.0 * soft_weight * (a.transpose() * a);
      Eigen::VectorXd rhs = 2.0 * soft_weight * (a.transpose() * y);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(mmat);
      if (ldlt.info() != Eigen::Success) throw NumericError("normal equations factorization failed");
      x = ldlt.solve(rhs);
      double rel = (mmat * x - rhs).norm() / std::max(rhs.norm(), 1e-12);
      if (rel > 1e-10)
        throw NumericError("normal-equation residual " + std::to_string(rel) + " exceeds 1e-10");
    }
    int i = 0;
    for (int r = 0; r < problem.height; ++r)
      for (int c = 0; c < problem.width; ++c) out.at(r, c, ch) = x(i++);
  }
  return out;
}

}  // namespace pxp
