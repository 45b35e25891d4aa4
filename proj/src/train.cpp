#include "pxp/train.hpp"

#include <cmath>
#include <numeric>

#include "pxp/rng.hpp"

namespace pxp {

double mean_bits_per_dim(const ArPriorModel& model, const std::vector<Image>& patches) {
  if (patches.empty()) throw ParamError("cannot evaluate on an empty patch set");
  double total = 0.0;
  std::size_t pixels = 0;
  for (const auto& p : patches) {
    total -= model.log_density(p);
    pixels += p.size();
  }
  return total / (static_cast<double>(pixels) * std::log(2.0));
}

TrainResult train_ar_prior(const std::vector<Image>& dataset, const TrainConfig& config,
                           std::uint64_t rng_seed) {
  if (dataset.empty()) throw ParamError("train_ar_prior: empty dataset");
  for (const auto& p : dataset) {
    if (p.channels != 1) throw ParamError("train_ar_prior: patches must be single-channel");
    if (p.height != dataset[0].height || p.width != dataset[0].width)
      throw ParamError("train_ar_prior: patches must share one shape");
  }
  if (config.epochs < 1 || config.batch < 1) throw ParamError("train_ar_prior: bad schedule");
  if (!(config.holdout_fraction >= 0.0 && config.holdout_fraction < 1.0))
    throw ParamError("train_ar_prior: holdout_fraction must lie in [0,1)");

  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(derive_seed(rng_seed, 0));
  split_rng.shuffle(order);
  std::size_t n_hold = n >= 2
      ? std::min<std::size_t>(n - 1, std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                         config.holdout_fraction * static_cast<double>(n)))))
      : 0;
  std::vector<Image> holdout;
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_hold) holdout.push_back(dataset[order[i]]);
    else train_idx.push_back(order[i]);
  }
  if (holdout.empty()) holdout.push_back(dataset[0]);  // degenerate single-patch dataset

  TrainResult result{ArPriorModel(config.arch, derive_seed(rng_seed, 1)), {}, 0.0, 0.0};
  result.holdout_bpd_initial = mean_bits_per_dim(result.model, holdout);

  ArParams grad = result.model.params();
  ArParams velocity = result.model.params();
  grad.set_zero();
  velocity.set_zero();

  const double pixels_per_patch = static_cast<double>(dataset[0].size());
  Rng epoch_rng(derive_seed(rng_seed, 2));
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    epoch_rng.shuffle(train_idx);
    for (std::size_t start = 0; start < train_idx.size();
         start += static_cast<std::size_t>(config.batch)) {
      std::size_t stop = std::min(train_idx.size(), start + static_cast<std::size_t>(config.batch));
      grad.set_zero();
      double nll = 0.0;
      for (std::size_t i = start; i < stop; ++i)
        nll += result.model.nll_with_param_grad(dataset[train_idx[i]], grad);
      const double denom = static_cast<double>(stop - start) * pixels_per_patch;
      nll /= denom;
      if (!std::isfinite(nll))
        throw NumericError("training loss became non-finite at step " + std::to_string(step));
      auto g = grad.tensors();
      auto v = velocity.tensors();
      auto p = result.model.params().tensors();
      for (std::size_t t = 0; t < g.size(); ++t)
        for (std::size_t i = 0; i < g[t].second; ++i) {
          v[t].first[i] = config.momentum * v[t].first[i] - config.lr * g[t].first[i] / denom;
          p[t].first[i] += v[t].first[i];
        }
      result.loss_trace.push_back(nll / std::log(2.0));
      ++step;
    }
  }
  result.holdout_bpd_final = mean_bits_per_dim(result.model, holdout);
  if (!std::isfinite(result.holdout_bpd_final))
    throw NumericError("model diverged: non-finite held-out loss after training");
  return result;
}

}  // namespace pxp
