#include "pxp/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "pxp/ar_model.hpp"
#include "pxp/io.hpp"
#include "pxp/oracle.hpp"
#include "pxp/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pxp {

namespace {

TaskKind task_from_string(const std::string& s) {
  if (s == "inpaint") return TaskKind::inpaint;
  if (s == "spc") return TaskKind::spc;
  if (s == "lisens") return TaskKind::lisens;
  if (s == "flatcam") return TaskKind::flatcam;
  throw ParamError("config field 'task': unknown value '" + s + "'");
}

std::string task_name(TaskKind t) {
  switch (t) {
    case TaskKind::inpaint: return "inpaint";
    case TaskKind::spc: return "spc";
    case TaskKind::lisens: return "lisens";
    case TaskKind::flatcam: return "flatcam";
  }
  return "?";
}

SolveMode mode_from_string(const std::string& s) {
  if (s == "hard") return SolveMode::hard;
  if (s == "alm") return SolveMode::alm;
  if (s == "soft") return SolveMode::soft;
  throw ParamError("config field 'solver.mode': unknown value '" + s + "'");
}

std::string mode_name(SolveMode m) {
  switch (m) {
    case SolveMode::hard: return "hard";
    case SolveMode::alm: return "alm";
    case SolveMode::soft: return "soft";
  }
  return "?";
}

// Scalar-or-list field.
std::vector<double> number_list(const json& j, const std::string& field) {
  std::vector<double> out;
  if (j.is_number()) out.push_back(j.get<double>());
  else if (j.is_array())
    for (const auto& v : j) {
      if (!v.is_number()) throw ParamError("config field '" + field + "': expected numbers");
      out.push_back(v.get<double>());
    }
  else
    throw ParamError("config field '" + field + "': expected a number or list");
  if (out.empty()) throw ParamError("config field '" + field + "': empty list");
  return out;
}

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  try {
    return json::parse(is, nullptr, true, true);  // allow comments
  } catch (const json::parse_error& e) {
    throw ParamError("config parse error in " + path + ": " + e.what());
  }
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json double_or_inf(double v) {
  if (std::isinf(v)) return json(v > 0 ? "inf" : "-inf");
  return json(v);
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& path) {
  json j = load_json(path);
  ExperimentConfig cfg;
  if (!j.contains("task")) throw ParamError("config field 'task' is required");
  cfg.task = task_from_string(j.at("task").get<std::string>());

  const char* rate_field =
      cfg.task == TaskKind::inpaint ? "missing_fraction" : "measurement_rate";
  if (!j.contains(rate_field))
    throw ParamError(std::string("config field '") + rate_field + "' is required");
  cfg.rates = number_list(j.at(rate_field), rate_field);
  for (double r : cfg.rates) {
    if (cfg.task == TaskKind::inpaint) {
      if (!(r >= 0.0 && r <= 1.0))
        throw ParamError("config field 'missing_fraction': value " + format_double(r) +
                         " outside [0,1]");
    } else if (!(r > 0.0 && r <= 1.0)) {
      throw ParamError("config field 'measurement_rate': value " + format_double(r) +
                       " outside (0,1]");
    }
  }

  cfg.sigmas = j.contains("noise_sigma") ? number_list(j.at("noise_sigma"), "noise_sigma")
                                         : std::vector<double>{0.0};
  for (double s : cfg.sigmas)
    if (s < 0.0) throw ParamError("config field 'noise_sigma': negative value");

  if (j.contains("prior")) {
    const json& p = j.at("prior");
    cfg.prior.kind = p.value("kind", std::string("gaussian_mrf"));
    if (cfg.prior.kind != "gaussian_mrf" && cfg.prior.kind != "ar" && cfg.prior.kind != "uniform")
      throw ParamError("config field 'prior.kind': unknown value '" + cfg.prior.kind + "'");
    cfg.prior.epsilon = p.value("epsilon", cfg.prior.epsilon);
    cfg.prior.checkpoint = p.value("checkpoint", std::string());
    if (cfg.prior.kind == "ar") {
      if (cfg.prior.checkpoint.empty())
        throw ParamError("config field 'prior.checkpoint' is required for the ar prior");
      if (!fs::exists(cfg.prior.checkpoint))
        throw ParamError("config field 'prior.checkpoint': file not found: " +
                         cfg.prior.checkpoint);
    }
  }

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    if (s.contains("mode")) cfg.solver.mode = mode_from_string(s.at("mode").get<std::string>());
    cfg.solver.alpha = s.value("alpha", cfg.solver.alpha);
    cfg.solver.momentum = s.value("momentum", cfg.solver.momentum);
    cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
    cfg.solver.rho = s.value("rho", cfg.solver.rho);
    cfg.solver.soft_weight = s.value("soft_weight", cfg.solver.soft_weight);
    cfg.solver.tile = s.value("tile", cfg.solver.tile);
    cfg.solver.early_stop = s.value("early_stop", cfg.solver.early_stop);
    if (s.contains("dropout_ratio"))
      cfg.dropout_ratios = number_list(s.at("dropout_ratio"), "solver.dropout_ratio");
    else
      cfg.dropout_ratios = {cfg.solver.dropout_ratio};
  } else {
    cfg.dropout_ratios = {cfg.solver.dropout_ratio};
  }
  for (double d : cfg.dropout_ratios)
    if (!(d >= 0.0 && d < 1.0))
      throw ParamError("config field 'solver.dropout_ratio': value outside [0,1)");

  if (cfg.task == TaskKind::flatcam) {
    if (cfg.solver.mode == SolveMode::hard)
      throw ParamError("config field 'solver.mode': flatcam has no hard projection; use alm or soft");
  } else if (cfg.solver.mode == SolveMode::alm) {
    throw ParamError("config field 'solver.mode': alm applies to the flatcam task only");
  }

  if (!j.contains("images") || !j.at("images").is_array() || j.at("images").empty())
    throw ParamError("config field 'images' must be a non-empty list of paths");
  for (const auto& v : j.at("images")) {
    std::string p = v.get<std::string>();
    if (!fs::exists(p)) throw ParamError("config field 'images': file not found: " + p);
    cfg.images.push_back(std::move(p));
  }

  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.calibration = j.value("calibration", cfg.calibration);
  if (!cfg.calibration.empty() && !fs::exists(cfg.calibration))
    throw ParamError("config field 'calibration': file not found: " + cfg.calibration);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

std::unique_ptr<PriorInterface> make_prior(const PriorSpec& spec) {
  if (spec.kind == "uniform") return std::make_unique<UniformPrior>();
  if (spec.kind == "gaussian_mrf") return std::make_unique<GaussianMrfPrior>(spec.epsilon);
  if (spec.kind == "ar") return std::make_unique<ArPriorModel>(load_checkpoint(spec.checkpoint));
  throw ParamError("unknown prior kind: " + spec.kind);
}

Problem build_problem(TaskKind task, const Image& truth, double rate, double sigma,
                      std::uint64_t seed, const std::string& calibration) {
  MeasurementSet y;
  Problem problem;
  switch (task) {
    case TaskKind::inpaint: {
      MaskOperator mask = make_mask(truth.height, truth.width, rate, derive_seed(seed, 0));
      y = apply_mask(truth, mask);
      problem = make_inpaint_problem(mask, y, truth.channels);
      break;
    }
    case TaskKind::spc: {
      int m = std::max<long long>(1, std::llround(rate * truth.pixels()));
      DenseSensingOperator op = make_spc_operator(m, truth.pixels(), derive_seed(seed, 0));
      y = spc_forward(op, truth);
      problem = make_spc_problem(op, y, truth.height, truth.width, truth.channels);
      break;
    }
    case TaskKind::lisens: {
      int m = std::max<long long>(1, std::llround(rate * truth.height));
      RowSensingOperator op = make_lisens_operator(m, truth.height, derive_seed(seed, 0));
      y = lisens_forward(op, truth);
      problem = make_lisens_problem(op, y, truth.width, truth.channels);
      break;
    }
    case TaskKind::flatcam: {
      SeparableOperator op;
      if (!calibration.empty()) {
        op = load_calibration(calibration);
        if (op.left.cols() != truth.height || op.right.cols() != truth.width)
          throw ParamError("calibration operator does not match the image shape");
      } else {
        if (truth.height != truth.width)
          throw ParamError("generated flatcam operators need square images");
        int m = std::max<long long>(
            1, std::llround(truth.height * std::sqrt(rate)));
        op = make_flatcam_operator(m, truth.height, derive_seed(seed, 0));
      }
      y = flatcam_forward(op, truth);
      problem = make_flatcam_problem(op, y, truth.channels);
      break;
    }
  }
  problem.y = add_measurement_noise(problem.y, sigma, derive_seed(seed, 1));
  return problem;
}

Image zero_fill_baseline(const Problem& problem) {
  return std::visit(
      [&](const auto& op) -> Image {
        using T = std::decay_t<decltype(op)>;
        Image out(problem.height, problem.width, problem.channels, 0.0);
        if constexpr (std::is_same_v<T, MaskOperator>) {
          for (int ch = 0; ch < problem.channels; ++ch)
            out.plane(ch) = problem.y.per_channel[static_cast<std::size_t>(ch)];
        } else if constexpr (std::is_same_v<T, DenseSensingOperator>) {
          for (int ch = 0; ch < problem.channels; ++ch) {
            Eigen::VectorXd v =
                op.matrix.transpose() * problem.y.per_channel[static_cast<std::size_t>(ch)].col(0);
            int i = 0;
            for (int r = 0; r < problem.height; ++r)
              for (int c = 0; c < problem.width; ++c) out.at(r, c, ch) = v(i++);
          }
        } else if constexpr (std::is_same_v<T, RowSensingOperator>) {
          for (int ch = 0; ch < problem.channels; ++ch)
            out.plane(ch) =
                op.matrix.transpose() * problem.y.per_channel[static_cast<std::size_t>(ch)];
        } else {
          for (int ch = 0; ch < problem.channels; ++ch)
            out.plane(ch) = op.left.transpose() *
                            problem.y.per_channel[static_cast<std::size_t>(ch)] * op.right;
        }
        return clip_unit(std::move(out));
      },
      problem.op);
}

Image gmrf_map_baseline(const Problem& problem, double epsilon) {
  GaussianMrfPrior prior(epsilon);
  return clip_unit(gaussian_mrf_map_oracle(problem, OracleMode::hard, 0.0, prior));
}

std::string trace_csv(const ReconstructionReport& report, bool with_psnr) {
  std::string out = with_psnr ? "iteration,log_density,residual,grad_norm,psnr_vs_truth\n"
                              : "iteration,log_density,residual,grad_norm\n";
  for (const auto& r : report.trace) {
    out += std::to_string(r.iteration);
    out += "," + format_double(r.log_density);
    out += "," + format_double(r.residual);
    out += "," + format_double(r.grad_norm);
    if (with_psnr) out += "," + format_double(r.psnr);
    out += "\n";
  }
  return out;
}

std::vector<RunOutcome> run_experiment(const ExperimentConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + config.output_dir);
  auto prior = make_prior(config.prior);

  std::vector<RunOutcome> outcomes;
  int run_index = 0;
  for (const auto& image_path : config.images)
    for (double rate : config.rates)
      for (double sigma : config.sigmas)
        for (double dropout : config.dropout_ratios) {
          Image truth = load_image(image_path);
          std::uint64_t run_seed = derive_seed(config.seed, static_cast<std::uint64_t>(run_index));
          Problem problem =
              build_problem(config.task, truth, rate, sigma, run_seed, config.calibration);
          SolverConfig scfg = config.solver;
          scfg.dropout_ratio = dropout;
          scfg.rng_seed = derive_seed(run_seed, 2);
          ReconstructionReport report = solve(problem, *prior, scfg, &truth);

          RunOutcome oc;
          oc.image_path = image_path;
          oc.rate = rate;
          oc.sigma = sigma;
          oc.dropout_ratio = dropout;
          oc.metrics.psnr_db = psnr(truth, report.estimate);
          oc.metrics.ssim = ssim(truth, report.estimate);
          if (config.prior.kind != "gaussian_mrf")
            oc.metrics.bits_per_dim = bits_per_dim(-prior->log_density(report.estimate),
                                                   static_cast<long long>(report.estimate.size()));

          char run_name[16];
          std::snprintf(run_name, sizeof(run_name), "run_%03d", run_index);
          fs::path run_dir = fs::path(config.output_dir) / run_name;
          fs::create_directories(run_dir, ec);
          if (ec) throw IoError("cannot create run directory: " + run_dir.string());
          oc.run_dir = run_dir.string();

          save_image(report.estimate,
                     (run_dir / (truth.channels == 1 ? "estimate.pgm" : "estimate.png")).string());
          {
            std::ofstream os(run_dir / "trace.csv");
            if (!os) throw IoError("cannot write trace.csv");
            os << trace_csv(report, true);
          }
          {
            json m{{"task", task_name(config.task)},
                   {"image", image_path},
                   {"rate", rate},
                   {"noise_sigma", sigma},
                   {"dropout_ratio", dropout},
                   {"mode", mode_name(scfg.mode)},
                   {"prior", config.prior.kind},
                   {"seed", config.seed},
                   {"iterations", report.trace.size()},
                   {"psnr_db", double_or_inf(oc.metrics.psnr_db)},
                   {"ssim", oc.metrics.ssim},
                   {"final_residual", report.trace.back().residual}};
            if (oc.metrics.bits_per_dim) m["bits_per_dim"] = *oc.metrics.bits_per_dim;
            std::ofstream os(run_dir / "metrics.json");
            if (!os) throw IoError("cannot write metrics.json");
            os << m.dump(2) << "\n";
          }
          oc.report = std::move(report);
          outcomes.push_back(std::move(oc));
          ++run_index;
        }
  return outcomes;
}

std::vector<RunOutcome> run_experiment(const std::string& config_path) {
  return run_experiment(parse_experiment_config(config_path));
}

std::string compare_table(const std::vector<MetricReport>& reports,
                          const std::vector<std::string>& labels) {
  if (reports.empty()) throw ParamError("compare_table: no reports");
  if (reports.size() != labels.size())
    throw ParamError("compare_table: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(reports.size()) + " reports");
  std::string out = "label,psnr_db,ssim,bits_per_dim\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out += labels[i];
    out += "," + format_double(reports[i].psnr_db);
    out += "," + format_double(reports[i].ssim);
    out += ",";
    if (reports[i].bits_per_dim) out += format_double(*reports[i].bits_per_dim);
    out += "\n";
  }
  return out;
}

std::string table_from_directory(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<fs::path> metric_files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    fs::path m = entry.path() / "metrics.json";
    if (fs::exists(m)) metric_files.push_back(m);
  }
  std::sort(metric_files.begin(), metric_files.end());
  if (metric_files.empty()) throw ParamError("no run metrics found under " + dir);

  std::vector<MetricReport> reports;
  std::vector<std::string> labels;
  for (const auto& path : metric_files) {
    json m = load_json(path.string());
    MetricReport r;
    const json& p = m.at("psnr_db");
    r.psnr_db = p.is_string() ? std::numeric_limits<double>::infinity() : p.get<double>();
    r.ssim = m.at("ssim").get<double>();
    if (m.contains("bits_per_dim")) r.bits_per_dim = m.at("bits_per_dim").get<double>();
    reports.push_back(r);
    labels.push_back(m.value("image", std::string("?")) + "|" + m.value("task", std::string("?")) +
                     "|rate=" + format_double(m.value("rate", 0.0)) +
                     "|sigma=" + format_double(m.value("noise_sigma", 0.0)) +
                     "|dropout=" + format_double(m.value("dropout_ratio", 0.0)) + "|" +
                     m.value("mode", std::string("?")) + "+" + m.value("prior", std::string("?")));
  }
  return compare_table(reports, labels);
}

}  // namespace pxp
