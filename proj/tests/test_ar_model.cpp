#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pxp/ar_model.hpp"
#include "pxp/metrics.hpp"
#include "pxp/rng.hpp"

using namespace pxp;

namespace {

Image random_image(int h, int w, std::uint64_t seed, double lo = 0.02, double hi = 0.98) {
  Image img(h, w);
  Rng rng(seed);
  for (double& v : img.data) v = lo + (hi - lo) * rng.uniform01();
  return img;
}

struct TmpDirJanitor {
  ~TmpDirJanitor() {
    std::error_code ec;
    std::filesystem::remove_all("ar_test_tmp", ec);
  }
} const tmp_dir_janitor;

// Quantize to the 256-level lattice so discrete and relaxed scoring agree on
// which bin a pixel occupies.
Image quantized(Image img) {
  for (double& v : img.data) v = std::round(v * 255.0) / 255.0;
  return img;
}

ArConfig small_config(int patch) {
  ArConfig cfg;
  cfg.layers = 2;
  cfg.channels = 8;
  cfg.mixtures = 3;
  cfg.patch_size = patch;
  return cfg;
}

// The zero-weight head makes the init context-free; add noise everywhere so
// causality and gradient tests exercise real context dependence.
void randomize(ArPriorModel& model, std::uint64_t seed, double scale = 0.1) {
  Rng rng(seed);
  for (auto [ptr, n] : model.params().tensors())
    for (std::size_t i = 0; i < n; ++i) ptr[i] += scale * (2.0 * rng.uniform01() - 1.0);
}

}  // namespace

TEST_CASE("masked taps exclude the centre and later positions") {
  const auto& a = mask_a_taps();
  CHECK(a.size() == 12);
  for (auto [dr, dc] : a) {
    CHECK(dr <= 0);
    CHECK((dr < 0 || dc < 0));  // strictly before the centre in raster order
    CHECK(std::abs(dr) <= 2);
    CHECK(std::abs(dc) <= 2);
  }
  const auto& b = mask_b_taps();
  CHECK(b.size() == 5);
  int centre = 0;
  for (auto [dr, dc] : b) {
    CHECK((dr < 0 || (dr == 0 && dc <= 0)));
    if (dr == 0 && dc == 0) ++centre;
  }
  CHECK(centre == 1);
}

TEST_CASE("bias-only init is near-uniform over the level lattice") {
  ArPriorModel model(small_config(16), 1);
  // One pixel per level: the mean bits/dim is the exact average cost of the
  // initial conditional over all 256 levels.
  Image img(16, 16);
  for (int v = 0; v < 256; ++v) img.data[static_cast<std::size_t>(v)] = v / 255.0;
  double bpd = bits_per_dim(-model.log_density(img), img.pixels());
  CHECK(bpd == doctest::Approx(8.221000085087).epsilon(1e-9));
  // Per-level the init deviates from the flat 8 bits by at most ~1.53 bits.
  std::vector<MixtureParams> cond = ar_conditional(model, img);
  for (int v = 0; v < 256; ++v) {
    double bits = -discretized_logistic_logprob(cond[0], v) / std::log(2.0);
    CHECK(bits >= 8.0 - 1.53);
    CHECK(bits <= 8.0 + 1.53);
  }
}

TEST_CASE("conditionals at the bias-only init are identical everywhere") {
  ArPriorModel model(small_config(6), 3);
  Image img = quantized(random_image(6, 6, 4));
  std::vector<MixtureParams> cond = ar_conditional(model, img);
  REQUIRE(cond.size() == 36);
  for (std::size_t i = 1; i < cond.size(); ++i) {
    CHECK((cond[i].logits - cond[0].logits).abs().maxCoeff() == 0.0);
    CHECK((cond[i].means - cond[0].means).abs().maxCoeff() == 0.0);
    CHECK((cond[i].log_scales - cond[0].log_scales).abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("perturbing a pixel leaves earlier conditionals bit-identical") {
  Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    ArPriorModel model(small_config(6), 60 + trial);
    randomize(model, 600 + trial);
    Image img = quantized(random_image(6, 6, 70 + trial));
    int idx = static_cast<int>(rng.below(36));
    Image tweaked = img;
    double& v = tweaked.data[static_cast<std::size_t>(idx)];
    v = v > 0.5 ? v - 0.3 : v + 0.3;

    std::vector<MixtureParams> before = ar_conditional(model, img);
    std::vector<MixtureParams> after = ar_conditional(model, tweaked);
    for (int i = 0; i <= idx; ++i) {
      CHECK((before[i].logits - after[i].logits).abs().maxCoeff() == 0.0);
      CHECK((before[i].means - after[i].means).abs().maxCoeff() == 0.0);
      CHECK((before[i].log_scales - after[i].log_scales).abs().maxCoeff() == 0.0);
    }
    // Sensitivity: some later conditional inside the receptive field moves.
    bool changed = false;
    for (int i = idx + 1; i < 36 && !changed; ++i)
      changed = (before[i].means - after[i].means).abs().maxCoeff() > 0.0;
    if (idx < 35) CHECK(changed);
  }
}

TEST_CASE("log_density factorizes: equals the sum of conditional scores") {
  ArPriorModel model(small_config(4), 9);
  randomize(model, 90);
  Image img = quantized(random_image(4, 4, 91));
  std::vector<MixtureParams> cond = ar_conditional(model, img);
  double total = 0.0;
  for (int i = 0; i < 16; ++i) {
    int level = static_cast<int>(std::lround(img.data[static_cast<std::size_t>(i)] * 255.0));
    total += discretized_logistic_logprob(cond[static_cast<std::size_t>(i)], level);
  }
  CHECK(model.log_density(img) == doctest::Approx(total).epsilon(1e-9));
}

TEST_CASE("constant image scores n times the single-pixel term at init") {
  ArPriorModel model(small_config(5), 13);
  Image img(5, 5, 1, 128.0 / 255.0);
  std::vector<MixtureParams> cond = ar_conditional(model, img);
  double one = discretized_logistic_logprob(cond[0], 128);
  CHECK(model.log_density(img) == doctest::Approx(25.0 * one).epsilon(1e-12));
}

TEST_CASE("input gradient matches finite differences of the relaxed density") {
  const double h = 1e-4;
  for (int trial = 0; trial < 3; ++trial) {
    ArPriorModel model(small_config(6), 20 + trial);
    randomize(model, 21 + trial);
    Image x = random_image(6, 6, 22 + trial);
    Image g = model.grad_log_density(x);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      Image up = x, dn = x;
      up.data[i] += h;
      dn.data[i] -= h;
      double fd = (model.log_density_relaxed(up) - model.log_density_relaxed(dn)) / (2 * h);
      num += (fd - g.data[i]) * (fd - g.data[i]);
      den += fd * fd;
    }
    REQUIRE(den > 0.0);
    CHECK(std::sqrt(num / den) <= 1e-4);
  }
}

TEST_CASE("parameter gradient matches finite differences of the nll") {
  ArPriorModel model(small_config(4), 31);
  randomize(model, 32);
  Image x = quantized(random_image(4, 4, 33));

  ArParams grad = model.params();
  grad.set_zero();
  double nll = model.nll_with_param_grad(x, grad);
  CHECK(nll == doctest::Approx(-model.log_density(x)).epsilon(1e-10));

  auto tensors = model.params().tensors();
  auto gtensors = grad.tensors();
  Rng rng(34);
  const double h = 1e-5;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    // Probe a few entries of every tensor.
    for (int probe = 0; probe < 3; ++probe) {
      std::size_t i = rng.below(tensors[t].second);
      double* p = tensors[t].first + i;
      double saved = *p;
      *p = saved + h;
      double up = -model.log_density(x);
      *p = saved - h;
      double dn = -model.log_density(x);
      *p = saved;
      double fd = (up - dn) / (2 * h);
      double an = gtensors[t].first[i];
      CHECK(an == doctest::Approx(fd).epsilon(5e-4).scale(1.0));
    }
  }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  ArPriorModel model(small_config(7), 41);
  randomize(model, 42);
  std::filesystem::create_directories("ar_test_tmp");
  const std::string path = "ar_test_tmp/model.ckpt";
  save_checkpoint(model, path);
  ArPriorModel back = load_checkpoint(path);
  CHECK(back.config().layers == model.config().layers);
  CHECK(back.config().channels == model.config().channels);
  CHECK(back.config().mixtures == model.config().mixtures);
  CHECK(back.config().patch_size == model.config().patch_size);
  CHECK(back.seed() == model.seed());
  auto a = model.params().tensors();
  auto b = back.params().tensors();
  REQUIRE(a.size() == b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    REQUIRE(a[t].second == b[t].second);
    for (std::size_t i = 0; i < a[t].second; ++i) CHECK(a[t].first[i] == b[t].first[i]);
  }
  Image x = quantized(random_image(7, 7, 43));
  CHECK(model.log_density(x) == back.log_density(x));
}

TEST_CASE("corrupt checkpoints are rejected") {
  namespace fs = std::filesystem;
  fs::create_directories("ar_test_tmp");
  std::ofstream("ar_test_tmp/bad.ckpt") << "not a checkpoint\n";
  CHECK_THROWS_AS(load_checkpoint("ar_test_tmp/bad.ckpt"), FormatError);
  CHECK_THROWS_AS(load_checkpoint("ar_test_tmp/absent.ckpt"), IoError);
}

TEST_CASE("ar_conditional is size-agnostic but single-channel only") {
  ArPriorModel model(small_config(6), 2);
  CHECK_THROWS_AS(ar_conditional(model, Image(5, 6, 3)), ParamError);
  // The masked convolutions slide over any spatial extent.
  CHECK(ar_conditional(model, Image(5, 6)).size() == 30);
}
