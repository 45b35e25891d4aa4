#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pxp/ar_model.hpp"
#include "pxp/harness.hpp"
#include "pxp/io.hpp"
#include "pxp/metrics.hpp"
#include "pxp/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw pxp::IoError("cannot open " + path);
  try {
    return json::parse(is, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw pxp::ParamError(std::string("parse error in ") + path + ": " + e.what());
  }
}

int cmd_run(const std::string& config_path, long long seed_override) {
  pxp::ExperimentConfig cfg = pxp::parse_experiment_config(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  auto outcomes = pxp::run_experiment(cfg);
  for (const auto& oc : outcomes)
    std::printf("%s  psnr=%.4f dB  ssim=%.4f\n", oc.run_dir.c_str(), oc.metrics.psnr_db,
                oc.metrics.ssim);
  std::printf("%zu run(s) written under %s\n", outcomes.size(), cfg.output_dir.c_str());
  return 0;
}

int cmd_gen_textures(const std::string& spec_path, long long seed_override) {
  json j = load_json(spec_path);
  pxp::SyntheticTextureSpec spec;
  if (!j.contains("generator")) throw pxp::ParamError("texture spec field 'generator' is required");
  spec.generator = pxp::texture_kind_from_string(j.at("generator").get<std::string>());
  spec.patch_size = j.value("patch_size", spec.patch_size);
  if (!j.contains("count")) throw pxp::ParamError("texture spec field 'count' is required");
  spec.count = j.at("count").get<int>();
  spec.rng_seed = j.value("rng_seed", spec.rng_seed);
  spec.period = j.value("period", spec.period);
  if (seed_override >= 0) spec.rng_seed = static_cast<std::uint64_t>(seed_override);
  std::string out_dir = j.value("output_dir", std::string("textures"));
  pxp::generate_textures(spec, out_dir);
  std::printf("%d patch(es) written under %s\n", spec.count, out_dir.c_str());
  return 0;
}

int cmd_train_prior(const std::string& config_path, long long seed_override) {
  json j = load_json(config_path);
  pxp::TrainConfig cfg;
  if (j.contains("arch")) {
    const json& a = j.at("arch");
    cfg.arch.layers = a.value("layers", cfg.arch.layers);
    cfg.arch.channels = a.value("channels", cfg.arch.channels);
    cfg.arch.mixtures = a.value("mixtures", cfg.arch.mixtures);
    cfg.arch.patch_size = a.value("patch_size", cfg.arch.patch_size);
  }
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch = j.value("batch", cfg.batch);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.momentum = j.value("momentum", cfg.momentum);
  cfg.holdout_fraction = j.value("holdout_fraction", cfg.holdout_fraction);
  std::uint64_t seed = j.value("seed", 0ull);
  if (seed_override >= 0) seed = static_cast<std::uint64_t>(seed_override);
  std::string output = j.value("output", std::string("prior.ckpt"));

  std::vector<pxp::Image> dataset;
  if (j.contains("dataset_dir")) {
    std::string dir = j.at("dataset_dir").get<std::string>();
    if (!fs::is_directory(dir)) throw pxp::IoError("not a directory: " + dir);
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
      auto ext = entry.path().extension().string();
      if (ext == ".pgm" || ext == ".png") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) dataset.push_back(pxp::load_image(p.string()));
  }
  if (j.contains("images"))
    for (const auto& v : j.at("images")) dataset.push_back(pxp::load_image(v.get<std::string>()));
  if (dataset.empty())
    throw pxp::ParamError("train config needs 'dataset_dir' or 'images' with at least one patch");

  pxp::TrainResult result = pxp::train_ar_prior(dataset, cfg, seed);
  pxp::save_checkpoint(result.model, output);
  std::printf("trained on %zu patch(es); holdout %.4f -> %.4f bits/dim; checkpoint %s\n",
              dataset.size(), result.holdout_bpd_initial, result.holdout_bpd_final,
              output.c_str());
  return 0;
}

int cmd_eval(const std::string& ref_path, const std::string& est_path,
             const std::string& checkpoint) {
  pxp::Image ref = pxp::load_image(ref_path);
  pxp::Image est = pxp::load_image(est_path);
  json out{{"psnr_db", pxp::psnr(ref, est)}, {"ssim", pxp::ssim(ref, est)}};
  if (std::isinf(out["psnr_db"].get<double>())) out["psnr_db"] = "inf";
  if (!checkpoint.empty()) {
    pxp::ArPriorModel model = pxp::load_checkpoint(checkpoint);
    out["bits_per_dim"] = pxp::bits_per_dim(-model.log_density(est),
                                            static_cast<long long>(est.size()));
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"patch-prior reconstruction toolkit"};
  app.require_subcommand(1);
  long long seed_override = -1;
  app.add_option("--seed", seed_override, "override the seed from the config file");

  std::string run_config;
  CLI::App* run = app.add_subcommand("run", "run a reconstruction experiment from a JSON config");
  run->add_option("config", run_config, "experiment config path")->required();

  std::string tex_spec;
  CLI::App* gen = app.add_subcommand("gen-textures", "write synthetic texture patches");
  gen->add_option("spec", tex_spec, "texture spec path")->required();

  std::string train_config;
  CLI::App* train = app.add_subcommand("train-prior", "fit the autoregressive prior");
  train->add_option("config", train_config, "training config path")->required();

  std::string ref_path, est_path, eval_checkpoint;
  CLI::App* eval = app.add_subcommand("eval", "compare an estimate against a reference image");
  eval->add_option("reference", ref_path, "reference image")->required();
  eval->add_option("estimate", est_path, "estimate image")->required();
  eval->add_option("--checkpoint", eval_checkpoint, "prior checkpoint for bits/dim");

  std::string table_dir;
  CLI::App* table = app.add_subcommand("table", "aggregate run metrics into a CSV table");
  table->add_option("dir", table_dir, "experiment output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(run_config, seed_override);
    if (*gen) return cmd_gen_textures(tex_spec, seed_override);
    if (*train) return cmd_train_prior(train_config, seed_override);
    if (*eval) return cmd_eval(ref_path, est_path, eval_checkpoint);
    if (*table) {
      std::cout << pxp::table_from_directory(table_dir);
      return 0;
    }
  } catch (const pxp::ParamError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const pxp::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const pxp::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const pxp::FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return 4;
  }
  return 0;
}
