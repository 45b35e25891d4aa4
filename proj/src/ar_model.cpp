#include "pxp/ar_model.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "pxp/io.hpp"
#include "pxp/rng.hpp"

namespace pxp {

const std::vector<std::pair<int, int>>& mask_a_taps() {
  static const std::vector<std::pair<int, int>> taps = [] {
    std::vector<std::pair<int, int>> t;
    for (int dr = -2; dr <= 0; ++dr)
      for (int dc = -2; dc <= 2; ++dc)
        if (dr < 0 || dc < 0) t.emplace_back(dr, dc);
    return t;
  }();
  return taps;
}

const std::vector<std::pair<int, int>>& mask_b_taps() {
  static const std::vector<std::pair<int, int>> taps = {
      {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 0}};
  return taps;
}

std::vector<std::pair<double*, std::size_t>> ArParams::tensors() {
  std::vector<std::pair<double*, std::size_t>> out;
  for (auto& v : w0) out.emplace_back(v.data(), static_cast<std::size_t>(v.size()));
  out.emplace_back(b0.data(), static_cast<std::size_t>(b0.size()));
  for (auto& layer : w)
    for (auto& m : layer) out.emplace_back(m.data(), static_cast<std::size_t>(m.size()));
  for (auto& v : b) out.emplace_back(v.data(), static_cast<std::size_t>(v.size()));
  out.emplace_back(head_w.data(), static_cast<std::size_t>(head_w.size()));
  out.emplace_back(head_b.data(), static_cast<std::size_t>(head_b.size()));
  return out;
}

std::vector<std::pair<const double*, std::size_t>> ArParams::tensors() const {
  std::vector<std::pair<const double*, std::size_t>> out;
  for (auto& v : w0) out.emplace_back(v.data(), static_cast<std::size_t>(v.size()));
  out.emplace_back(b0.data(), static_cast<std::size_t>(b0.size()));
  for (auto& layer : w)
    for (auto& m : layer) out.emplace_back(m.data(), static_cast<std::size_t>(m.size()));
  for (auto& v : b) out.emplace_back(v.data(), static_cast<std::size_t>(v.size()));
  out.emplace_back(head_w.data(), static_cast<std::size_t>(head_w.size()));
  out.emplace_back(head_b.data(), static_cast<std::size_t>(head_b.size()));
  return out;
}

void ArParams::set_zero() {
  for (auto [ptr, n] : tensors())
    for (std::size_t i = 0; i < n; ++i) ptr[i] = 0.0;
}

Eigen::VectorXd near_uniform_head_bias(int mixtures) {
  Eigen::VectorXd bias(3 * mixtures);
  if (mixtures == 3) {
    bias << 0.0, 0.86806229, 0.0,                        // logits
        0.09165840, 0.5, 0.90834160,                     // means
        -3.59221193, -2.35872156, -3.59221193;           // log-scales
    return bias;
  }
  for (int k = 0; k < mixtures; ++k) {
    bias(k) = 0.0;
    bias(mixtures + k) = (k + 0.5) / mixtures;
    bias(2 * mixtures + k) = std::log(0.5 / mixtures);
  }
  return bias;
}

namespace {

ArParams make_params(const ArConfig& cfg, std::uint64_t seed) {
  const int C = cfg.channels;
  const int K = cfg.mixtures;
  Rng rng(seed);
  auto uniform_fill = [&rng](double* p, std::size_t n, double a) {
    for (std::size_t i = 0; i < n; ++i) p[i] = a * (2.0 * rng.uniform01() - 1.0);
  };
  ArParams P;
  const double a0 = 1.0 / std::sqrt(static_cast<double>(mask_a_taps().size()));
  for (std::size_t t = 0; t < mask_a_taps().size(); ++t) {
    Eigen::VectorXd v(C);
    uniform_fill(v.data(), static_cast<std::size_t>(C), a0);
    P.w0.push_back(std::move(v));
  }
  P.b0 = Eigen::VectorXd::Zero(C);
  const double ah = 1.0 / std::sqrt(static_cast<double>(mask_b_taps().size() * C));
  for (int l = 0; l < cfg.layers; ++l) {
    std::vector<Eigen::MatrixXd> layer;
    for (std::size_t t = 0; t < mask_b_taps().size(); ++t) {
      Eigen::MatrixXd m(C, C);
      uniform_fill(m.data(), static_cast<std::size_t>(m.size()), ah);
      layer.push_back(std::move(m));
    }
    P.w.push_back(std::move(layer));
    P.b.push_back(Eigen::VectorXd::Zero(C));
  }
  // Zero head weights put the model exactly at the bias-only point: the
  // initial conditional is the near-uniform mixture at every pixel, and the
  // first optimizer steps break the symmetry through the head gradient.
  P.head_w = Eigen::MatrixXd::Zero(3 * K, C);
  P.head_b = near_uniform_head_bias(K);
  return P;
}

struct ForwardPass {
  int H = 0, W = 0, N = 0;
  Eigen::VectorXd x;                // N, rasterized input
  std::vector<Eigen::MatrixXd> t;   // tanh pre-activations: t[0]=tanh(u0), t[l]=tanh(a_l)
  std::vector<Eigen::MatrixXd> h;   // features: h[0]=t[0], h[l]=h[l-1]+t[l]
  Eigen::MatrixXd out;              // 3K x N
};

// Runs one single-channel plane through the network, keeping what the
// backward pass needs.
ForwardPass forward(const ArParams& P, const ArConfig& cfg, const Image& image, int ch) {
  const int C = cfg.channels;
  ForwardPass f;
  f.H = image.height;
  f.W = image.width;
  f.N = f.H * f.W;
  f.x.resize(f.N);
  {
    int i = 0;
    for (int r = 0; r < f.H; ++r)
      for (int c = 0; c < f.W; ++c) f.x(i++) = image.at(r, c, ch);
  }

  Eigen::MatrixXd u0 = P.b0.replicate(1, f.N);
  const auto& tapsA = mask_a_taps();
  for (std::size_t t = 0; t < tapsA.size(); ++t) {
    auto [dr, dc] = tapsA[t];
    int c0 = std::max(0, -dc);
    int len = f.W - std::abs(dc);
    if (len <= 0) continue;
    for (int r = std::max(0, -dr); r < f.H; ++r) {
      int rin = r + dr;
      if (rin < 0 || rin >= f.H) continue;
      u0.block(0, r * f.W + c0, C, len).noalias() +=
          P.w0[t] * f.x.segment(rin * f.W + c0 + dc, len).transpose();
    }
  }
  f.t.push_back(u0.array().tanh().matrix());
  f.h.push_back(f.t[0]);

  const auto& tapsB = mask_b_taps();
  for (int l = 0; l < cfg.layers; ++l) {
    Eigen::MatrixXd a = P.b[static_cast<std::size_t>(l)].replicate(1, f.N);
    const auto& prev = f.h.back();
    for (std::size_t t = 0; t < tapsB.size(); ++t) {
      auto [dr, dc] = tapsB[t];
      int c0 = std::max(0, -dc);
      int len = f.W - std::abs(dc);
      if (len <= 0) continue;
      for (int r = std::max(0, -dr); r < f.H; ++r) {
        int rin = r + dr;
        if (rin < 0 || rin >= f.H) continue;
        a.block(0, r * f.W + c0, C, len).noalias() +=
            P.w[static_cast<std::size_t>(l)][t] * prev.block(0, rin * f.W + c0 + dc, C, len);
      }
    }
    Eigen::MatrixXd tl = a.array().tanh().matrix();
    f.h.push_back(f.h.back() + tl);
    f.t.push_back(std::move(tl));
  }

  f.out = P.head_w * f.h.back();
  f.out.colwise() += P.head_b;
  return f;
}

// Backward pass from d(out) to the input gradient; parameter gradients are
// accumulated into *pg when given.
Eigen::VectorXd backward(const ArParams& P, const ArConfig& cfg, const ForwardPass& f,
                         const Eigen::MatrixXd& dout, ArParams* pg) {
  const int C = cfg.channels;
  if (pg) {
    pg->head_w.noalias() += dout * f.h.back().transpose();
    pg->head_b.noalias() += dout.rowwise().sum();
  }
  Eigen::MatrixXd dh = P.head_w.transpose() * dout;

  const auto& tapsB = mask_b_taps();
  for (int l = cfg.layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd& tl = f.t[static_cast<std::size_t>(l) + 1];
    Eigen::MatrixXd da = (dh.array() * (1.0 - tl.array().square())).matrix();
    const auto& prev = f.h[static_cast<std::size_t>(l)];
    if (pg) pg->b[static_cast<std::size_t>(l)].noalias() += da.rowwise().sum();
    Eigen::MatrixXd dprev = dh;  // residual skip path
    for (std::size_t t = 0; t < tapsB.size(); ++t) {
      auto [dr, dc] = tapsB[t];
      int c0 = std::max(0, -dc);
      int len = f.W - std::abs(dc);
      if (len <= 0) continue;
      for (int r = std::max(0, -dr); r < f.H; ++r) {
        int rin = r + dr;
        if (rin < 0 || rin >= f.H) continue;
        auto da_seg = da.block(0, r * f.W + c0, C, len);
        auto in_seg = prev.block(0, rin * f.W + c0 + dc, C, len);
        if (pg)
          pg->w[static_cast<std::size_t>(l)][t].noalias() += da_seg * in_seg.transpose();
        dprev.block(0, rin * f.W + c0 + dc, C, len).noalias() +=
            P.w[static_cast<std::size_t>(l)][t].transpose() * da_seg;
      }
    }
    dh = std::move(dprev);
  }

  Eigen::MatrixXd da0 = (dh.array() * (1.0 - f.t[0].array().square())).matrix();
  if (pg) pg->b0.noalias() += da0.rowwise().sum();
  Eigen::VectorXd dx = Eigen::VectorXd::Zero(f.N);
  const auto& tapsA = mask_a_taps();
  for (std::size_t t = 0; t < tapsA.size(); ++t) {
    auto [dr, dc] = tapsA[t];
    int c0 = std::max(0, -dc);
    int len = f.W - std::abs(dc);
    if (len <= 0) continue;
    for (int r = std::max(0, -dr); r < f.H; ++r) {
      int rin = r + dr;
      if (rin < 0 || rin >= f.H) continue;
      auto da_seg = da0.block(0, r * f.W + c0, C, len);
      if (pg)
        pg->w0[t].noalias() += da_seg * f.x.segment(rin * f.W + c0 + dc, len);
      dx.segment(rin * f.W + c0 + dc, len).noalias() +=
          (P.w0[t].transpose() * da_seg).transpose();
    }
  }
  return dx;
}

MixtureParams pixel_params(const Eigen::MatrixXd& out, int p, int K) {
  MixtureParams mp;
  mp.logits = out.col(p).segment(0, K).array();
  mp.means = out.col(p).segment(K, K).array();
  mp.log_scales = out.col(p).segment(2 * K, K).array();
  return mp;
}

int quantize(double x) {
  double c = std::clamp(x, 0.0, 1.0);
  return static_cast<int>(std::lround(c * 255.0));
}

}  // namespace

ArPriorModel::ArPriorModel(const ArConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), seed_(seed), params_(make_params(cfg, seed)) {
  if (cfg.layers < 1 || cfg.channels < 1 || cfg.mixtures < 1 || cfg.patch_size < 1)
    throw ParamError("ArPriorModel: architecture fields must be positive");
  if (cfg.levels != 256) throw ParamError("ArPriorModel: only 256 intensity levels supported");
}

double ArPriorModel::log_density(const Image& image) const {
  if (!image.finite()) throw ParamError("log_density: non-finite image entries");
  const int K = cfg_.mixtures;
  double total = 0.0;
  for (int ch = 0; ch < image.channels; ++ch) {
    ForwardPass f = forward(params_, cfg_, image, ch);
    for (int p = 0; p < f.N; ++p) {
      auto mp = pixel_params(f.out, p, K);
      total += discretized_logistic_eval(mp, 0.0, quantize(f.x(p)), false).log_prob;
    }
  }
  return total;
}

double ArPriorModel::log_density_relaxed(const Image& image) const {
  if (!image.finite()) throw ParamError("log_density: non-finite image entries");
  const int K = cfg_.mixtures;
  double total = 0.0;
  for (int ch = 0; ch < image.channels; ++ch) {
    ForwardPass f = forward(params_, cfg_, image, ch);
    for (int p = 0; p < f.N; ++p) {
      auto mp = pixel_params(f.out, p, K);
      total += discretized_logistic_eval(mp, f.x(p), -1, false).log_prob;
    }
  }
  return total;
}

Image ArPriorModel::grad_log_density(const Image& image) const {
  if (!image.finite()) throw ParamError("grad_log_density: non-finite image entries");
  const int K = cfg_.mixtures;
  Image g(image.height, image.width, image.channels, 0.0);
  for (int ch = 0; ch < image.channels; ++ch) {
    ForwardPass f = forward(params_, cfg_, image, ch);
    Eigen::MatrixXd dout(3 * K, f.N);
    Eigen::VectorXd direct(f.N);
    for (int p = 0; p < f.N; ++p) {
      auto mp = pixel_params(f.out, p, K);
      LogisticEval e = discretized_logistic_eval(mp, f.x(p), -1, true);
      dout.col(p).segment(0, K) = e.d_logits.matrix();
      dout.col(p).segment(K, K) = e.d_means.matrix();
      dout.col(p).segment(2 * K, K) = e.d_log_scales.matrix();
      direct(p) = e.d_x;
    }
    Eigen::VectorXd dx = backward(params_, cfg_, f, dout, nullptr);
    dx += direct;
    int i = 0;
    for (int r = 0; r < image.height; ++r)
      for (int c = 0; c < image.width; ++c) g.at(r, c, ch) = dx(i++);
  }
  return g;
}

double ArPriorModel::nll_with_param_grad(const Image& patch, ArParams& grad) const {
  if (patch.channels != 1) throw ParamError("training patches must be single-channel");
  if (!patch.finite()) throw ParamError("non-finite training patch");
  const int K = cfg_.mixtures;
  ForwardPass f = forward(params_, cfg_, patch, 0);
  Eigen::MatrixXd dout(3 * K, f.N);
  double nll = 0.0;
  for (int p = 0; p < f.N; ++p) {
    auto mp = pixel_params(f.out, p, K);
    LogisticEval e = discretized_logistic_eval(mp, 0.0, quantize(f.x(p)), true);
    nll -= e.log_prob;
    // dNLL/dout = -dlogP/dout
    dout.col(p).segment(0, K) = -e.d_logits.matrix();
    dout.col(p).segment(K, K) = -e.d_means.matrix();
    dout.col(p).segment(2 * K, K) = -e.d_log_scales.matrix();
  }
  backward(params_, cfg_, f, dout, &grad);
  return nll;
}

std::vector<MixtureParams> ar_conditional(const ArPriorModel& model, const Image& image) {
  if (image.channels != 1) throw ParamError("ar_conditional expects a single-channel image");
  if (!image.finite()) throw ParamError("ar_conditional: non-finite image entries");
  ForwardPass f = forward(model.params(), model.config(), image, 0);
  std::vector<MixtureParams> out;
  out.reserve(static_cast<std::size_t>(f.N));
  for (int p = 0; p < f.N; ++p) out.push_back(pixel_params(f.out, p, model.config().mixtures));
  return out;
}

// ------------------------------------------------------------- checkpoints

namespace {

void write_section(std::ostream& os, const std::string& name, const Eigen::MatrixXd& m) {
  os << name << "\n";
  write_pxp1(os, m);
}

Eigen::MatrixXd read_section(std::istream& is, const std::string& expect, long long rows,
                             long long cols) {
  std::string name;
  if (!std::getline(is, name)) throw FormatError("checkpoint truncated before section " + expect);
  if (name != expect) throw FormatError("checkpoint section '" + name + "', expected '" + expect + "'");
  Eigen::MatrixXd m = read_pxp1(is);
  if (m.rows() != rows || m.cols() != cols)
    throw FormatError("checkpoint section " + expect + " has shape " + std::to_string(m.rows()) +
                      "x" + std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  return m;
}

}  // namespace

void save_checkpoint(const ArPriorModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  const ArConfig& cfg = model.config();
  nlohmann::json meta{{"layers", cfg.layers},   {"channels", cfg.channels},
                      {"mixtures", cfg.mixtures}, {"patch_size", cfg.patch_size},
                      {"levels", cfg.levels},   {"seed", model.seed()}};
  os << meta.dump() << "\n";
  const ArParams& P = model.params();
  const int C = cfg.channels;
  Eigen::MatrixXd w0(C, static_cast<Eigen::Index>(mask_a_taps().size()));
  for (std::size_t t = 0; t < mask_a_taps().size(); ++t) w0.col(static_cast<Eigen::Index>(t)) = P.w0[t];
  write_section(os, "w0", w0);
  write_section(os, "b0", P.b0);
  for (int l = 0; l < cfg.layers; ++l) {
    Eigen::MatrixXd wl(C, static_cast<Eigen::Index>(mask_b_taps().size()) * C);
    for (std::size_t t = 0; t < mask_b_taps().size(); ++t)
      wl.middleCols(static_cast<Eigen::Index>(t) * C, C) = P.w[static_cast<std::size_t>(l)][t];
    write_section(os, "w" + std::to_string(l + 1), wl);
    write_section(os, "b" + std::to_string(l + 1), P.b[static_cast<std::size_t>(l)]);
  }
  write_section(os, "head_w", P.head_w);
  write_section(os, "head_b", P.head_b);
  if (!os) throw IoError("write failure: " + path);
}

ArPriorModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  std::string meta_line;
  if (!std::getline(is, meta_line)) throw FormatError("checkpoint missing metadata line");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }
  ArConfig cfg;
  std::uint64_t seed = 0;
  try {
    cfg.layers = meta.at("layers").get<int>();
    cfg.channels = meta.at("channels").get<int>();
    cfg.mixtures = meta.at("mixtures").get<int>();
    cfg.patch_size = meta.at("patch_size").get<int>();
    cfg.levels = meta.at("levels").get<int>();
    seed = meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata incomplete: ") + e.what());
  }
  ArPriorModel model(cfg, seed);
  ArParams& P = model.params();
  const int C = cfg.channels;
  Eigen::MatrixXd w0 = read_section(is, "w0", C, static_cast<long long>(mask_a_taps().size()));
  for (std::size_t t = 0; t < mask_a_taps().size(); ++t) P.w0[t] = w0.col(static_cast<Eigen::Index>(t));
  P.b0 = read_section(is, "b0", C, 1);
  for (int l = 0; l < cfg.layers; ++l) {
    Eigen::MatrixXd wl = read_section(is, "w" + std::to_string(l + 1), C,
                                      static_cast<long long>(mask_b_taps().size()) * C);
    for (std::size_t t = 0; t < mask_b_taps().size(); ++t)
      P.w[static_cast<std::size_t>(l)][t] = wl.middleCols(static_cast<Eigen::Index>(t) * C, C);
    P.b[static_cast<std::size_t>(l)] = read_section(is, "b" + std::to_string(l + 1), C, 1);
  }
  P.head_w = read_section(is, "head_w", 3 * cfg.mixtures, C);
  P.head_b = read_section(is, "head_b", 3 * cfg.mixtures, 1);
  return model;
}

}  // namespace pxp
