#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pxp/logistic.hpp"
#include "pxp/prior.hpp"

namespace pxp {

// Causal masked-convolution stack with a discretized-logistic-mixture head.
// First layer: 5x5 convolution whose mask admits only strictly-causal taps
// (the 12 positions before the centre in raster order). Hidden layers: 3x3
// causal taps including the centre, wrapped in residual tanh blocks:
//   h_l = h_{l-1} + tanh(W_l * h_{l-1} + b_l)
// Head: 1x1 projection to 3K outputs per pixel (K logits, K means,
// K log-scales). All activations are tanh, so the density is smooth in the
// inputs and finite-difference checks are meaningful.
struct ArConfig {
  int layers = 3;     // hidden residual layers
  int channels = 16;  // feature width
  int mixtures = 3;   // K logistic components
  int patch_size = 16;
  int levels = 256;
};

struct ArParams {
  std::vector<Eigen::VectorXd> w0;             // per first-layer tap, each C
  Eigen::VectorXd b0;                          // C
  std::vector<std::vector<Eigen::MatrixXd>> w; // [layer][tap], each C x C
  std::vector<Eigen::VectorXd> b;              // [layer], each C
  Eigen::MatrixXd head_w;                      // 3K x C
  Eigen::VectorXd head_b;                      // 3K

  // Flat views over every tensor, fixed order; the optimizer and the
  // checkpoint writer both iterate these.
  std::vector<std::pair<double*, std::size_t>> tensors();
  std::vector<std::pair<const double*, std::size_t>> tensors() const;
  void set_zero();
};

// Tap offsets (dr, dc), dr < 0 above the current row.
const std::vector<std::pair<int, int>>& mask_a_taps();  // 12, centre excluded
const std::vector<std::pair<int, int>>& mask_b_taps();  // 5, centre included

class ArPriorModel : public PriorInterface {
 public:
  ArPriorModel(const ArConfig& cfg, std::uint64_t seed);

  const ArConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  int receptive_field() const { return 2 + cfg_.layers; }
  ArParams& params() { return params_; }
  const ArParams& params() const { return params_; }

  int patch_size() const override { return cfg_.patch_size; }
  double log_density(const Image& image) const override;
  double log_density_relaxed(const Image& image) const override;
  Image grad_log_density(const Image& image) const override;

  // Discrete negative log-likelihood of one single-channel patch plus the
  // parameter gradient, accumulated into grad (same tensor layout).
  double nll_with_param_grad(const Image& patch, ArParams& grad) const;

 private:
  ArConfig cfg_;
  std::uint64_t seed_;
  ArParams params_;
};

// Per-pixel conditional parameters in raster order; single-channel images.
std::vector<MixtureParams> ar_conditional(const ArPriorModel& model, const Image& image);

// Checkpoint: one JSON metadata line, then named matrix-container sections.
// Round-trips bit-exactly.
void save_checkpoint(const ArPriorModel& model, const std::string& path);
ArPriorModel load_checkpoint(const std::string& path);

// Head bias giving a near-uniform initial conditional. For K=3 these are the
// best-fit constants (max deviation from the flat 1/256 mass is 1.53 bits);
// other K fall back to an evenly spread layout.
Eigen::VectorXd near_uniform_head_bias(int mixtures);

}  // namespace pxp
