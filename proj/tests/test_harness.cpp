#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <string>

#include "pxp/harness.hpp"
#include "pxp/io.hpp"
#include "pxp/oracle.hpp"

using namespace pxp;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kTmp = "harness_test_tmp";

struct TmpTree {
  TmpTree() {
    fs::remove_all(kTmp);
    fs::create_directories(kTmp);
  }
  ~TmpTree() { fs::remove_all(kTmp); }
};

std::string write_json(const json& j, const std::string& name) {
  fs::path p = kTmp / name;
  std::ofstream out(p);
  out << j.dump(2) << "\n";
  return p.string();
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string make_test_image(const std::string& name, std::uint64_t seed) {
  SyntheticTextureSpec spec;
  spec.generator = TextureKind::stripes;
  spec.patch_size = 16;
  spec.count = 1;
  spec.rng_seed = seed;
  Image img = generate_texture_patches(spec)[0];
  fs::path p = kTmp / name;
  save_image(img, p.string());
  return p.string();
}

json base_config(const std::string& image_path, const std::string& out_dir) {
  return json{{"task", "inpaint"},
              {"missing_fraction", 0.5},
              {"noise_sigma", 0.0},
              {"prior", {{"kind", "gaussian_mrf"}, {"epsilon", 0.05}}},
              {"solver",
               {{"mode", "hard"},
                {"alpha", 0.2},
                {"momentum", 0.9},
                {"max_iter", 3},
                {"dropout_ratio", 0.0}}},
              {"images", json::array({image_path})},
              {"output_dir", out_dir},
              {"seed", 7}};
}

}  // namespace

TEST_CASE("texture patches are deterministic, quantized and shaped") {
  for (TextureKind kind : {TextureKind::stripes, TextureKind::checker,
                           TextureKind::smooth_gradient, TextureKind::edge_blobs}) {
    SyntheticTextureSpec spec;
    spec.generator = kind;
    spec.patch_size = 16;
    spec.count = 4;
    spec.rng_seed = 11;
    std::vector<Image> a = generate_texture_patches(spec);
    std::vector<Image> b = generate_texture_patches(spec);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].data == b[i].data);
      CHECK(a[i].height == 16);
      CHECK(a[i].width == 16);
      for (double v : a[i].data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(std::abs(v * 255.0 - std::round(v * 255.0)) <= 1e-9);
      }
    }
    spec.rng_seed = 12;
    std::vector<Image> c = generate_texture_patches(spec);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) any_diff = any_diff || a[i].data != c[i].data;
    CHECK(any_diff);
  }
}

TEST_CASE("stripes are constant along one axis and checkers two-valued") {
  SyntheticTextureSpec spec;
  spec.generator = TextureKind::stripes;
  spec.patch_size = 16;
  spec.count = 8;
  spec.rng_seed = 21;
  for (const Image& img : generate_texture_patches(spec)) {
    bool rows_const = true, cols_const = true;
    for (int r = 0; r < 16; ++r)
      for (int c = 1; c < 16; ++c) rows_const = rows_const && img.at(r, c) == img.at(r, 0);
    for (int c = 0; c < 16; ++c)
      for (int r = 1; r < 16; ++r) cols_const = cols_const && img.at(r, c) == img.at(0, c);
    CHECK((rows_const || cols_const));
  }

  spec.generator = TextureKind::checker;
  spec.period = 4;
  spec.rng_seed = 22;
  for (const Image& img : generate_texture_patches(spec)) {
    std::set<double> values(img.data.begin(), img.data.end());
    CHECK(values.size() == 2);
    CHECK(img.at(0, 0) != img.at(0, 4));
    CHECK(img.at(0, 0) == img.at(0, 8));
    CHECK(img.at(0, 0) == img.at(4, 4));
  }
}

TEST_CASE("generate_textures writes deterministic pgm files") {
  TmpTree tree;
  SyntheticTextureSpec spec;
  spec.generator = TextureKind::checker;
  spec.patch_size = 16;
  spec.count = 3;
  spec.rng_seed = 31;
  fs::path dir_a = kTmp / "tex_a";
  fs::path dir_b = kTmp / "tex_b";
  generate_textures(spec, dir_a.string());
  generate_textures(spec, dir_b.string());
  for (int i = 0; i < 3; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "texture_%04d.pgm", i);
    REQUIRE(fs::exists(dir_a / name));
    CHECK(read_bytes(dir_a / name) == read_bytes(dir_b / name));
  }
  CHECK_FALSE(fs::exists(dir_a / "texture_0003.pgm"));
}

TEST_CASE("parse_experiment_config reads the full schema") {
  TmpTree tree;
  std::string img = make_test_image("truth.pgm", 1);
  json cfg = base_config(img, (kTmp / "out").string());
  cfg["missing_fraction"] = json::array({0.25, 0.5});
  cfg["noise_sigma"] = json::array({0.0, 0.01});
  cfg["solver"]["dropout_ratio"] = json::array({0.0, 0.25});
  ExperimentConfig parsed = parse_experiment_config(write_json(cfg, "cfg.json"));
  CHECK(parsed.task == TaskKind::inpaint);
  CHECK(parsed.rates == std::vector<double>{0.25, 0.5});
  CHECK(parsed.sigmas == std::vector<double>{0.0, 0.01});
  CHECK(parsed.dropout_ratios == std::vector<double>{0.0, 0.25});
  CHECK(parsed.prior.kind == "gaussian_mrf");
  CHECK(parsed.solver.mode == SolveMode::hard);
  CHECK(parsed.solver.alpha == 0.2);
  CHECK(parsed.solver.max_iter == 3);
  CHECK(parsed.images.size() == 1);
  CHECK(parsed.seed == 7);
}

TEST_CASE("parse_experiment_config rejects bad inputs with precise messages") {
  TmpTree tree;
  std::string img = make_test_image("truth.pgm", 1);

  json spc = base_config(img, (kTmp / "out").string());
  spc["task"] = "spc";
  spc.erase("missing_fraction");
  spc["measurement_rate"] = 1.5;
  try {
    parse_experiment_config(write_json(spc, "bad_rate.json"));
    FAIL("expected ParamError");
  } catch (const ParamError& e) {
    CHECK(std::string(e.what()).find("measurement_rate") != std::string::npos);
  }

  json fc = base_config(img, (kTmp / "out").string());
  fc["task"] = "flatcam";
  fc.erase("missing_fraction");
  fc["measurement_rate"] = 0.5;
  fc["solver"]["mode"] = "hard";
  CHECK_THROWS_AS(parse_experiment_config(write_json(fc, "bad_mode.json")), ParamError);
  fc["solver"]["mode"] = "alm";
  CHECK_NOTHROW(parse_experiment_config(write_json(fc, "ok_mode.json")));

  json alm = base_config(img, (kTmp / "out").string());
  alm["solver"]["mode"] = "alm";
  CHECK_THROWS_AS(parse_experiment_config(write_json(alm, "bad_alm.json")), ParamError);

  json ghost = base_config((kTmp / "missing.pgm").string(), (kTmp / "out").string());
  CHECK_THROWS_AS(parse_experiment_config(write_json(ghost, "bad_img.json")), ParamError);

  json noimg = base_config(img, (kTmp / "out").string());
  noimg["images"] = json::array();
  CHECK_THROWS_AS(parse_experiment_config(write_json(noimg, "no_img.json")), ParamError);

  json ar = base_config(img, (kTmp / "out").string());
  ar["prior"] = {{"kind", "ar"}, {"checkpoint", (kTmp / "missing.ckpt").string()}};
  CHECK_THROWS_AS(parse_experiment_config(write_json(ar, "bad_ckpt.json")), ParamError);

  json calib = base_config(img, (kTmp / "out").string());
  calib["calibration"] = (kTmp / "missing.calib").string();
  CHECK_THROWS_AS(parse_experiment_config(write_json(calib, "bad_calib.json")), ParamError);
}

TEST_CASE("run_experiment writes runs and repeats byte-identically") {
  TmpTree tree;
  std::string img_a = make_test_image("a.pgm", 41);
  std::string img_b = make_test_image("b.pgm", 42);

  json cfg = base_config(img_a, (kTmp / "out1").string());
  cfg["images"] = json::array({img_a, img_b});
  cfg["missing_fraction"] = json::array({0.25, 0.5});
  std::vector<RunOutcome> outcomes = run_experiment(parse_experiment_config(write_json(cfg, "c1.json")));
  REQUIRE(outcomes.size() == 4);

  // Grid order: images outer, rates inner.
  CHECK(outcomes[0].image_path == img_a);
  CHECK(outcomes[0].rate == 0.25);
  CHECK(outcomes[1].rate == 0.5);
  CHECK(outcomes[2].image_path == img_b);

  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    fs::path dir = outcomes[i].run_dir;
    REQUIRE(fs::exists(dir / "estimate.pgm"));
    REQUIRE(fs::exists(dir / "trace.csv"));
    REQUIRE(fs::exists(dir / "metrics.json"));

    std::ifstream trace(dir / "trace.csv");
    std::string header;
    std::getline(trace, header);
    CHECK(header == "iteration,log_density,residual,grad_norm,psnr_vs_truth");
    int lines = 0;
    for (std::string line; std::getline(trace, line);) ++lines;
    CHECK(lines == 3);

    json metrics = json::parse(read_bytes(dir / "metrics.json"));
    CHECK(metrics.at("task") == "inpaint");
    CHECK(metrics.at("mode") == "hard");
    CHECK(metrics.at("prior") == "gaussian_mrf");
    CHECK(metrics.at("iterations") == 3);
    CHECK(metrics.contains("psnr_db"));
    CHECK(metrics.contains("ssim"));
    CHECK(metrics.contains("final_residual"));
    CHECK_FALSE(metrics.contains("bits_per_dim"));  // gaussian_mrf reports no likelihood
  }

  json cfg2 = cfg;
  cfg2["output_dir"] = (kTmp / "out2").string();
  std::vector<RunOutcome> again = run_experiment(parse_experiment_config(write_json(cfg2, "c2.json")));
  REQUIRE(again.size() == outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    CHECK(read_bytes(fs::path(outcomes[i].run_dir) / "metrics.json") ==
          read_bytes(fs::path(again[i].run_dir) / "metrics.json"));
    CHECK(outcomes[i].report.estimate.data == again[i].report.estimate.data);
  }
}

TEST_CASE("baselines embed measurements and solve the quadratic model") {
  TmpTree tree;
  Image truth = load_image(make_test_image("truth.pgm", 51));
  Problem problem = build_problem(TaskKind::inpaint, truth, 0.5, 0.0, 9, "");

  Image zf = zero_fill_baseline(problem);
  const auto& mask = std::get<MaskOperator>(problem.op);
  for (int r = 0; r < truth.height; ++r)
    for (int c = 0; c < truth.width; ++c) {
      if (mask.at(r, c) != 0.0) CHECK(zf.at(r, c) == truth.at(r, c));
      else CHECK(zf.at(r, c) == 0.0);
    }

  Image map = gmrf_map_baseline(problem, 0.05);
  CHECK(psnr(truth, map) >= psnr(truth, zf));
  for (double v : map.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("compare_table formats reports and validates sizes") {
  MetricReport a;
  a.psnr_db = 30.0;
  a.ssim = 0.9;
  MetricReport b;
  b.psnr_db = std::numeric_limits<double>::infinity();
  b.ssim = 1.0;
  b.bits_per_dim = 3.25;
  std::string table = compare_table({a, b}, {"zero_fill", "solver"});
  std::istringstream lines(table);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "label,psnr_db,ssim,bits_per_dim");
  std::getline(lines, line);
  CHECK(line == "zero_fill,30,0.90000000000000002,");
  std::getline(lines, line);
  CHECK(line == "solver,inf,1,3.25");
  CHECK_FALSE(std::getline(lines, line));

  CHECK_THROWS_AS(compare_table({a}, {"x", "y"}), ParamError);
  CHECK_THROWS_AS(compare_table({}, {}), ParamError);
}

TEST_CASE("table_from_directory summarizes run outputs") {
  TmpTree tree;
  std::string img = make_test_image("truth.pgm", 61);
  json cfg = base_config(img, (kTmp / "out").string());
  cfg["missing_fraction"] = json::array({0.25, 0.5});
  run_experiment(parse_experiment_config(write_json(cfg, "cfg.json")));

  std::string table = table_from_directory((kTmp / "out").string());
  std::istringstream lines(table);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "label,psnr_db,ssim,bits_per_dim");
  int rows = 0;
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty()) ++rows;
    CHECK(line.find("inpaint") != std::string::npos);
  }
  CHECK(rows == 2);

  CHECK_THROWS_AS(table_from_directory((kTmp / "nowhere").string()), IoError);
}
