#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "pxp/prior.hpp"
#include "pxp/problem.hpp"

namespace pxp {

enum class SolveMode { hard, alm, soft };

struct SolverConfig {
  double alpha = 7.5;
  double momentum = 0.9;
  double dropout_ratio = 0.25;  // fraction of pixels NOT updated per iteration
  int max_iter = 100;
  SolveMode mode = SolveMode::hard;
  double rho = 10.0;          // ALM penalty
  double soft_weight = 50.0;  // likelihood weight in soft mode
  int tile = 16;              // prior-gradient tiling
  std::uint64_t rng_seed = 0;
  bool early_stop = false;    // optional: stop when the estimate stalls
  double early_stop_tol = 1e-7;
  int early_stop_window = 20;
};

struct MomentumState {
  Image velocity;
};

struct AlmState {
  std::vector<Eigen::MatrixXd> dual;  // one per channel, shape of the measurements
};

struct TraceRecord {
  int iteration = 0;
  double log_density = 0.0;
  double residual_preclip = 0.0;  // after the constraint step, before clipping
  double residual = 0.0;          // after clipping
  double grad_norm = 0.0;
  double objective = 0.0;  // mode-specific merit (soft: penalized objective)
  double psnr = std::numeric_limits<double>::quiet_NaN();  // vs ground truth if given
};

struct ReconstructionReport {
  Image estimate;
  std::vector<TraceRecord> trace;
  SolverConfig config;
  std::uint64_t init_seed = 0;
  std::uint64_t dropout_seed = 0;
  double wall_time_sec = 0.0;
};

Image initialize_uniform(int height, int width, int channels, std::uint64_t rng_seed);

// Fresh exact-count binary dropout mask: round(ratio*N) zeros.
MaskOperator dropout_mask(int height, int width, double dropout_ratio, std::uint64_t rng_seed);

// velocity <- momentum*velocity + M o grad log p(x);  H = x + alpha*velocity.
// The gradient is evaluated tile-wise when the prior has a native patch size.
// grad_norm_out, when given, receives the unmasked gradient norm.
Image prior_ascent_step(const Image& x, const PriorInterface& prior, const SolverConfig& cfg,
                        MomentumState& momentum, const MaskOperator& update_mask,
                        double* grad_norm_out = nullptr);

// Non-overlapping raster-order tiles; non-divisible sizes are reflect-padded
// (edge excluded) and stitch crops back.
std::vector<Image> split(const Image& image, int tile);
Image stitch(const std::vector<Image>& tiles, int height, int width);

// Tile-wise prior gradient (identity tiling for size-agnostic priors).
Image tiled_prior_grad(const Image& x, const PriorInterface& prior, int tile);

MeasurementSet add_measurement_noise(const MeasurementSet& y, double sigma,
                                     std::uint64_t rng_seed);

ReconstructionReport solve_hard(const Problem& problem, const PriorInterface& prior,
                                const SolverConfig& cfg, const Image* ground_truth = nullptr);
ReconstructionReport solve_alm(const Problem& problem, const PriorInterface& prior,
                               const SolverConfig& cfg, const Image* ground_truth = nullptr);
ReconstructionReport solve_soft(const Problem& problem, const PriorInterface& prior,
                                const SolverConfig& cfg, const Image* ground_truth = nullptr);

// Dispatch on cfg.mode.
ReconstructionReport solve(const Problem& problem, const PriorInterface& prior,
                           const SolverConfig& cfg, const Image* ground_truth = nullptr);

}  // namespace pxp
