#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pxp/metrics.hpp"
#include "pxp/problem.hpp"
#include "pxp/solver.hpp"
#include "pxp/train.hpp"

namespace pxp {

// ------------------------------------------------------------ textures

enum class TextureKind { stripes, checker, smooth_gradient, edge_blobs };

struct SyntheticTextureSpec {
  TextureKind generator = TextureKind::stripes;
  int patch_size = 16;
  int count = 1;
  std::uint64_t rng_seed = 0;
  int period = 0;  // checker period; 0 picks one per patch
};

TextureKind texture_kind_from_string(const std::string& name);

// Deterministic patches in [0,1], quantized to the 256 levels.
std::vector<Image> generate_texture_patches(const SyntheticTextureSpec& spec);

// Writes `count` PGM files (texture_NNNN.pgm) into the directory.
void generate_textures(const SyntheticTextureSpec& spec, const std::string& out_dir);

// ------------------------------------------------------------ experiments

enum class TaskKind { inpaint, spc, lisens, flatcam };

struct PriorSpec {
  std::string kind = "gaussian_mrf";  // gaussian_mrf | ar | uniform
  double epsilon = 0.05;
  std::string checkpoint;  // ar only
};

struct ExperimentConfig {
  TaskKind task = TaskKind::inpaint;
  std::vector<double> rates;   // measurement_rate (spc/lisens/flatcam) or missing_fraction
  std::vector<double> sigmas;  // noise_sigma values
  std::vector<double> dropout_ratios;
  PriorSpec prior;
  SolverConfig solver;
  std::vector<std::string> images;
  std::string output_dir = "out";
  std::string calibration;  // optional flatcam calibration file
  std::uint64_t seed = 0;
};

ExperimentConfig parse_experiment_config(const std::string& path);

// One reconstruction run of the expanded grid.
struct RunOutcome {
  std::string run_dir;
  std::string image_path;
  double rate = 0.0;
  double sigma = 0.0;
  double dropout_ratio = 0.0;
  MetricReport metrics;
  ReconstructionReport report;
};

// Executes the full grid; writes estimate image, trace.csv and metrics.json
// per run under config.output_dir. Returns outcomes in config order.
std::vector<RunOutcome> run_experiment(const ExperimentConfig& config);
std::vector<RunOutcome> run_experiment(const std::string& config_path);

std::unique_ptr<PriorInterface> make_prior(const PriorSpec& spec);

// Builds the measurement problem for one task instance.
Problem build_problem(TaskKind task, const Image& truth, double rate, double sigma,
                      std::uint64_t seed, const std::string& calibration);

// Reference reconstructors for comparison rows.
Image zero_fill_baseline(const Problem& problem);  // masked y / A^T y embedding
Image gmrf_map_baseline(const Problem& problem, double epsilon);

// CSV table: header + one row per report, config order preserved.
std::string compare_table(const std::vector<MetricReport>& reports,
                          const std::vector<std::string>& labels);

// Scans run_* subdirectories for metrics.json and emits the CSV table.
std::string table_from_directory(const std::string& dir);

// Per-iteration trace as CSV.
std::string trace_csv(const ReconstructionReport& report, bool with_psnr);

}  // namespace pxp
