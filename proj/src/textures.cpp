#include <cmath>
#include <filesystem>

#include "pxp/harness.hpp"
#include "pxp/io.hpp"
#include "pxp/rng.hpp"

namespace pxp {

TextureKind texture_kind_from_string(const std::string& name) {
  if (name == "stripes") return TextureKind::stripes;
  if (name == "checker") return TextureKind::checker;
  if (name == "smooth_gradient") return TextureKind::smooth_gradient;
  if (name == "edge_blobs") return TextureKind::edge_blobs;
  throw ParamError("unknown texture generator: " + name);
}

namespace {

double quantize_level(double x) {
  return std::lround(std::clamp(x, 0.0, 1.0) * 255.0) / 255.0;
}

Image stripes_patch(int n, Rng& rng) {
  Image p(n, n, 1);
  bool horizontal = rng.uniform01() < 0.5;
  int limit = std::max(2, n / 4);
  int pos = 0;
  while (pos < n) {
    int w = 2 + static_cast<int>(rng.below(static_cast<std::size_t>(limit - 1)));
    double level = quantize_level(rng.uniform01());
    for (int i = pos; i < std::min(n, pos + w); ++i)
      for (int j = 0; j < n; ++j) {
        if (horizontal) p.at(i, j) = level;
        else p.at(j, i) = level;
      }
    pos += w;
  }
  return p;
}

Image checker_patch(int n, int period, Rng& rng) {
  int per = period > 0 ? period : static_cast<int>(2 + 2 * rng.below(4));  // 2,4,6,8
  double a = quantize_level(rng.uniform01());
  double b = quantize_level(rng.uniform01());
  while (std::abs(a - b) < 2.0 / 255.0) b = quantize_level(rng.uniform01());
  Image p(n, n, 1);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) p.at(r, c) = ((r / per + c / per) % 2 == 0) ? a : b;
  return p;
}

Image gradient_patch(int n, Rng& rng) {
  double theta = rng.uniform01() * 2.0 * M_PI;
  double offset = rng.uniform01();
  double gain = 2.0 * rng.uniform01() - 1.0;
  Image p(n, n, 1);
  double span = std::max(1, n - 1);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double t = std::cos(theta) * c / span + std::sin(theta) * r / span;
      p.at(r, c) = quantize_level(offset + gain * t);
    }
  return p;
}

Image blobs_patch(int n, Rng& rng) {
  Image p(n, n, 1, quantize_level(rng.uniform01()));
  int blobs = 2 + static_cast<int>(rng.below(4));
  for (int b = 0; b < blobs; ++b) {
    int h = 2 + static_cast<int>(rng.below(static_cast<std::size_t>(std::max(1, n / 2))));
    int w = 2 + static_cast<int>(rng.below(static_cast<std::size_t>(std::max(1, n / 2))));
    int r0 = static_cast<int>(rng.below(static_cast<std::size_t>(std::max(1, n - h))));
    int c0 = static_cast<int>(rng.below(static_cast<std::size_t>(std::max(1, n - w))));
    double level = quantize_level(rng.uniform01());
    for (int r = r0; r < std::min(n, r0 + h); ++r)
      for (int c = c0; c < std::min(n, c0 + w); ++c) p.at(r, c) = level;
  }
  return p;
}

}  // namespace

std::vector<Image> generate_texture_patches(const SyntheticTextureSpec& spec) {
  if (spec.patch_size < 2) throw ParamError("texture patch_size must be at least 2");
  if (spec.count < 1) throw ParamError("texture count must be positive");
  std::vector<Image> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) {
    Rng rng(derive_seed(spec.rng_seed, static_cast<std::uint64_t>(i)));
    switch (spec.generator) {
      case TextureKind::stripes: out.push_back(stripes_patch(spec.patch_size, rng)); break;
      case TextureKind::checker:
        out.push_back(checker_patch(spec.patch_size, spec.period, rng));
        break;
      case TextureKind::smooth_gradient: out.push_back(gradient_patch(spec.patch_size, rng)); break;
      case TextureKind::edge_blobs: out.push_back(blobs_patch(spec.patch_size, rng)); break;
    }
  }
  return out;
}

void generate_textures(const SyntheticTextureSpec& spec, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir);
  auto patches = generate_texture_patches(spec);
  for (std::size_t i = 0; i < patches.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "texture_%04zu.pgm", i);
    save_pgm(patches[i], (std::filesystem::path(out_dir) / name).string());
  }
}

}  // namespace pxp
