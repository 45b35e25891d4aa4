#include "pxp/logistic.hpp"

#include <cmath>

namespace pxp {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

}  // namespace

LogisticEval discretized_logistic_eval(const MixtureParams& params, double x, int value,
                                       bool with_grads) {
  const int K = params.components();
  if (K <= 0) throw ParamError("mixture must have at least one component");
  if (params.means.size() != K || params.log_scales.size() != K)
    throw ParamError("mixture parameter arrays disagree on component count");

  const bool discrete = value >= 0;
  if (discrete) x = value / 255.0;
  // Which tail branch applies: for a fixed level only the extreme bins are
  // open-ended; for the relaxed likelihood the same cut-offs are used on x.
  const bool low = discrete ? value == 0 : x < kBinHalfWidth;
  const bool high = discrete ? value == 255 : x > 1.0 - kBinHalfWidth;

  // Softmax weights, stabilized.
  Eigen::ArrayXd w = (params.logits - params.logits.maxCoeff()).exp();
  w /= w.sum();

  Eigen::ArrayXd p(K), dp_dmu(K), dp_dls(K), dp_dx(K);
  for (int k = 0; k < K; ++k) {
    double ls = std::max(params.log_scales(k), kLogScaleFloor);
    bool clamped = params.log_scales(k) < kLogScaleFloor;
    double s = std::exp(ls);
    double zp = (x + kBinHalfWidth - params.means(k)) / s;
    double zm = (x - kBinHalfWidth - params.means(k)) / s;
    double sp = sigmoid(zp), sm = sigmoid(zm);
    // Logistic pdf sigma'(z) = sigma(z)*sigma(-z); the two-factor form keeps
    // full relative precision deep in the tails, where 1 - sigma(z) rounds
    // to zero.
    double dp = sp * sigmoid(-zp), dm = sm * sigmoid(-zm);
    if (low) {
      p(k) = sp;
      dp_dx(k) = dp / s;
      dp_dmu(k) = -dp / s;
      dp_dls(k) = -dp * zp;
    } else if (high) {
      p(k) = sigmoid(-zm);
      dp_dx(k) = -dm / s;
      dp_dmu(k) = dm / s;
      dp_dls(k) = dm * zm;
    } else {
      // sigma(zp) - sigma(zm) cancels catastrophically when both edges sit
      // in the same tail; the product form sigma(zm)*sigma(-zp)*expm1(zp-zm)
      // is exact in every regime, evaluated in log space so the exponential
      // cannot overflow for tiny scales.
      double width = zp - zm;
      double log_pk = log_sigmoid(zm) + log_sigmoid(-zp) +
                      (width > 33.0 ? width : std::log(std::expm1(width)));
      p(k) = std::exp(log_pk);
      dp_dx(k) = (dp - dm) / s;
      dp_dmu(k) = -(dp - dm) / s;
      dp_dls(k) = -(dp * zp - dm * zm);
    }
    if (clamped) dp_dls(k) = 0.0;
  }

  double prob = (w * p).sum();
  LogisticEval out;
  if (prob < kProbFloor) {
    // Floored region: the log is constant, so all derivatives vanish.
    out.log_prob = std::log(kProbFloor);
    if (with_grads) {
      out.d_logits = Eigen::ArrayXd::Zero(K);
      out.d_means = Eigen::ArrayXd::Zero(K);
      out.d_log_scales = Eigen::ArrayXd::Zero(K);
    }
    return out;
  }
  out.log_prob = std::log(prob);
  if (with_grads) {
    out.d_x = !discrete ? (w * dp_dx).sum() / prob : 0.0;
    out.d_logits = w * (p - prob) / prob;
    out.d_means = w * dp_dmu / prob;
    out.d_log_scales = w * dp_dls / prob;
  }
  return out;
}

double discretized_logistic_logprob(const MixtureParams& params, int value) {
  if (value < 0 || value > 255)
    throw ParamError("intensity level out of range [0,255]: " + std::to_string(value));
  return discretized_logistic_eval(params, 0.0, value, false).log_prob;
}

}  // namespace pxp
