#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pxp/ar_model.hpp"
#include "pxp/harness.hpp"
#include "pxp/io.hpp"
#include "pxp/metrics.hpp"
#include "pxp/rng.hpp"

namespace py = pybind11;

namespace {

pxp::Image image_from_array(const py::array& arr) {
  py::array_t<double, py::array::c_style | py::array::forcecast> a(arr);
  if (a.ndim() != 2 && a.ndim() != 3)
    throw pxp::ParamError("expected a (H,W) or (H,W,C) array");
  int h = static_cast<int>(a.shape(0));
  int w = static_cast<int>(a.shape(1));
  int ch = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  pxp::Image img(h, w, ch);
  auto r = a.unchecked();
  for (int c = 0; c < ch; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        img.at(i, j, c) = a.ndim() == 3 ? r(i, j, c) : r(i, j);
  return img;
}

py::array array_from_image(const pxp::Image& img) {
  if (img.channels == 1) {
    py::array_t<double> a({img.height, img.width});
    auto r = a.mutable_unchecked<2>();
    for (int i = 0; i < img.height; ++i)
      for (int j = 0; j < img.width; ++j) r(i, j) = img.at(i, j, 0);
    return a;
  }
  py::array_t<double> a({img.height, img.width, img.channels});
  auto r = a.mutable_unchecked<3>();
  for (int c = 0; c < img.channels; ++c)
    for (int i = 0; i < img.height; ++i)
      for (int j = 0; j < img.width; ++j) r(i, j, c) = img.at(i, j, c);
  return a;
}

pxp::TaskKind parse_task(const std::string& s) {
  if (s == "inpaint") return pxp::TaskKind::inpaint;
  if (s == "spc") return pxp::TaskKind::spc;
  if (s == "lisens") return pxp::TaskKind::lisens;
  if (s == "flatcam") return pxp::TaskKind::flatcam;
  throw pxp::ParamError("unknown task: " + s);
}

}  // namespace

PYBIND11_MODULE(pxp, m) {
  m.doc() = "patch-prior image reconstruction toolkit";

  py::register_exception<pxp::ParamError>(m, "ParamError", PyExc_ValueError);
  py::register_exception<pxp::NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("load_image", [](const std::string& path) { return array_from_image(pxp::load_image(path)); },
        py::arg("path"), "Load a PGM or PNG image as a float array in [0,1].");
  m.def("save_image",
        [](const py::array& arr, const std::string& path) {
          pxp::save_image(image_from_array(arr), path);
        },
        py::arg("image"), py::arg("path"));

  m.def("psnr",
        [](const py::array& ref, const py::array& est) {
          return pxp::psnr(image_from_array(ref), image_from_array(est));
        },
        py::arg("reference"), py::arg("estimate"));
  m.def("ssim",
        [](const py::array& ref, const py::array& est) {
          return pxp::ssim(image_from_array(ref), image_from_array(est));
        },
        py::arg("reference"), py::arg("estimate"));

  m.def("log_density",
        [](const std::string& checkpoint, const py::array& arr) {
          pxp::ArPriorModel model = pxp::load_checkpoint(checkpoint);
          return model.log_density(image_from_array(arr));
        },
        py::arg("checkpoint"), py::arg("image"),
        "Exact log-probability of a quantized image under a trained prior.");

  m.def("generate_textures",
        [](const std::string& kind, int patch_size, int count, std::uint64_t seed, int period) {
          pxp::SyntheticTextureSpec spec;
          spec.generator = pxp::texture_kind_from_string(kind);
          spec.patch_size = patch_size;
          spec.count = count;
          spec.rng_seed = seed;
          spec.period = period;
          auto patches = pxp::generate_texture_patches(spec);
          py::list out;
          for (const auto& p : patches) out.append(array_from_image(p));
          return out;
        },
        py::arg("kind"), py::arg("patch_size") = 16, py::arg("count") = 1, py::arg("seed") = 0,
        py::arg("period") = 0);

  m.def("reconstruct",
        [](const py::array& truth_arr, const std::string& task, double rate, double sigma,
           const std::string& mode, const std::string& prior_kind, double epsilon,
           const std::string& checkpoint, double alpha, double momentum, double dropout,
           int max_iter, std::uint64_t seed) {
          pxp::Image truth = image_from_array(truth_arr);
          pxp::Problem problem = pxp::build_problem(parse_task(task), truth, rate, sigma, seed, "");
          pxp::PriorSpec pspec;
          pspec.kind = prior_kind;
          pspec.epsilon = epsilon;
          pspec.checkpoint = checkpoint;
          auto prior = pxp::make_prior(pspec);
          pxp::SolverConfig cfg;
          if (mode == "hard") cfg.mode = pxp::SolveMode::hard;
          else if (mode == "alm") cfg.mode = pxp::SolveMode::alm;
          else if (mode == "soft") cfg.mode = pxp::SolveMode::soft;
          else throw pxp::ParamError("unknown mode: " + mode);
          cfg.alpha = alpha;
          cfg.momentum = momentum;
          cfg.dropout_ratio = dropout;
          cfg.max_iter = max_iter;
          cfg.rng_seed = pxp::derive_seed(seed, 2);
          pxp::ReconstructionReport report = pxp::solve(problem, *prior, cfg, &truth);
          py::dict out;
          out["estimate"] = array_from_image(report.estimate);
          out["psnr_db"] = pxp::psnr(truth, report.estimate);
          out["ssim"] = pxp::ssim(truth, report.estimate);
          out["residual"] = report.trace.back().residual;
          out["iterations"] = report.trace.size();
          return out;
        },
        py::arg("truth"), py::arg("task"), py::arg("rate"), py::arg("sigma") = 0.0,
        py::arg("mode") = "hard", py::arg("prior") = "gaussian_mrf", py::arg("epsilon") = 0.05,
        py::arg("checkpoint") = "", py::arg("alpha") = 7.5, py::arg("momentum") = 0.9,
        py::arg("dropout") = 0.25, py::arg("max_iter") = 100, py::arg("seed") = 0,
        "Simulate measurements from a ground-truth image and reconstruct it.");

  m.def("run_experiment",
        [](const std::string& config_path) {
          auto outcomes = pxp::run_experiment(config_path);
          py::list out;
          for (const auto& oc : outcomes) {
            py::dict d;
            d["run_dir"] = oc.run_dir;
            d["image"] = oc.image_path;
            d["rate"] = oc.rate;
            d["sigma"] = oc.sigma;
            d["dropout_ratio"] = oc.dropout_ratio;
            d["psnr_db"] = oc.metrics.psnr_db;
            d["ssim"] = oc.metrics.ssim;
            if (oc.metrics.bits_per_dim) d["bits_per_dim"] = *oc.metrics.bits_per_dim;
            out.append(d);
          }
          return out;
        },
        py::arg("config_path"), "Run every grid point of a JSON experiment config.");
}
