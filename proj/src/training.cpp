#include "zdc/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "zdc/errors.hpp"

namespace zdc::training {

using diff::Adam;
using diff::AdamConfig;
using models::ForwardContext;
using models::Mode;

namespace {

constexpr std::size_t kEvalBatch = 64;

AdamConfig optimizer(const TrainConfig& cfg, float lr, float beta1) {
  AdamConfig a;
  a.lr = cfg.learning_rate > 0.0f ? cfg.learning_rate : lr;
  a.beta1 = cfg.beta1 > 0.0f ? cfg.beta1 : beta1;
  return a;
}

double scalar(const Var& v) { return static_cast<double>(v.value()[0]); }

/// Shuffled mini-batches over `n` rows, one epoch at a time. `step` returns
/// the batch losses; epoch losses are their sample-weighted means.
template <class Step>
TrainLog run_epochs(const std::string& model, const TrainConfig& cfg, std::size_t n, const EpochCallback& on_epoch,
                    Step&& step) {
  TrainLog log;
  log.model = model;
  log.seed = cfg.seed;
  std::vector<std::size_t> order(n);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = make_rng(cfg.seed, Stream::shuffle, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle);

    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t batch_index = 0;
    for (std::size_t lo = 0; lo < n; lo += cfg.batch_size, ++batch_index) {
      const std::size_t hi = std::min(n, lo + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + lo, hi - lo);
      std::map<std::string, double> losses;
      try {
        losses = step(rows, epoch, batch_index);
      } catch (const NumericError& e) {
        throw NumericError(model + " training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ": " + e.what());
      }
      for (const auto& [name, value] : losses) {
        if (!std::isfinite(value)) throw NumericError(model + " loss '" + name + "' is not finite");
        rec.losses[name] += value * static_cast<double>(rows.size());
      }
    }
    for (auto& [name, value] : rec.losses) value /= static_cast<double>(n);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return log;
}

Rng batch_rng(const TrainConfig& cfg, Stream stream, int epoch, std::size_t batch) {
  return make_rng(cfg.seed, stream, (static_cast<std::uint64_t>(epoch) << 32) ^ batch);
}

Tensor standard_normal(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<float> nd(0.0f, 1.0f);
  for (float& v : t.values()) v = nd(rng);
  return t;
}

std::vector<std::size_t> nonzero_train(const SampleSet& data, const char* who) {
  auto idx = data.indices(Split::train, true);
  require(!idx.empty(), std::string(who) + " needs non-zero training responses");
  return idx;
}

}  // namespace

void TrainConfig::validate() const {
  auto check = [](bool ok, const char* msg) {
    if (!ok) throw ValidationError(msg);
  };
  check(epochs >= 1, "epochs must be at least 1");
  check(batch_size >= 1, "batch size must be at least 1");
  check(std::isfinite(learning_rate) && learning_rate >= 0.0f, "learning rate must be non-negative");
  check(std::isfinite(beta1) && beta1 >= 0.0f && beta1 < 1.0f, "beta1 must lie in [0, 1)");
  check(std::isfinite(lambda_aux) && lambda_aux >= 0.0, "lambda_aux must be non-negative");
  check(std::isfinite(beta_kl) && beta_kl >= 0.0, "beta_kl must be non-negative");
}

double TrainLog::total_seconds() const noexcept {
  double s = 0.0;
  for (const auto& e : epochs) s += e.seconds;
  return s;
}

double TrainLog::loss(int epoch, const std::string& name) const {
  require(epoch >= 1 && static_cast<std::size_t>(epoch) <= epochs.size(), "epoch out of range");
  const auto& l = epochs[static_cast<std::size_t>(epoch - 1)].losses;
  const auto it = l.find(name);
  require(it != l.end(), "no loss named '" + name + "'");
  return it->second;
}

Batchable prepare(const SampleSet& data, std::span<const std::size_t> idx, const NormalizationStats& stats,
                  bool with_images) {
  require(!idx.empty(), "no samples selected");
  const auto n = static_cast<std::int64_t>(idx.size());
  Batchable b;
  b.cond = Tensor({n, models::kCondDim});
  if (with_images) {
    b.image = Tensor({n, 1, kGridSize, kGridSize});
    b.coords = Tensor({n, 2});
  }
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto c = stats.standardize(data.particle(idx[r]));
    std::copy(c.begin(), c.end(), b.cond.data() + r * kNumAttributes);
    if (!with_images) continue;
    const auto px = data.response(idx[r]);
    float* dst = b.image.data() + r * kGridPixels;
    for (std::size_t k = 0; k < kGridPixels; ++k) dst[k] = stats.normalize_pixel(px[k]);
    const auto am = argmax_coords(px);
    b.coords[2 * r] = static_cast<float>(am.row);
    b.coords[2 * r + 1] = static_cast<float>(am.col);
  }
  return b;
}

Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows) {
  Shape shape = t.shape();
  const std::size_t width = t.size() / static_cast<std::size_t>(shape[0]);
  shape[0] = static_cast<std::int64_t>(rows.size());
  Tensor out(shape);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(t.data() + rows[r] * width, width, out.data() + r * width);
  }
  return out;
}

ClassifierResult train_classifier(const SampleSet& data, const NormalizationStats& stats, const TrainConfig& cfg,
                                  const EpochCallback& on_epoch) {
  cfg.validate();
  const auto train_idx = data.indices(Split::train);
  require(!train_idx.empty(), "classifier needs training samples");
  Tensor target({static_cast<std::int64_t>(train_idx.size()), 1});
  std::size_t positives = 0;
  for (std::size_t r = 0; r < train_idx.size(); ++r) {
    target[r] = data.is_zero(train_idx[r]) ? 0.0f : 1.0f;
    positives += target[r] > 0.5f;
  }
  require(positives > 0 && positives < train_idx.size(), "classifier needs both zero and non-zero samples");
  const Batchable in = prepare(data, train_idx, stats, false);

  ClassifierResult result{models::ClassifierNet(cfg.seed), {}, {}};
  auto& net = result.net;
  Adam opt(net.params().trainable(), optimizer(cfg, 1e-3f, 0.9f));
  result.log = run_epochs("classifier", cfg, train_idx.size(), on_epoch,
                          [&](std::span<const std::size_t> rows, int, std::size_t) {
                            opt.zero_grad();
                            const Var p = net.forward(Var::constant(gather_rows(in.cond, rows)), {Mode::train});
                            const Var loss = diff::bce(p, gather_rows(target, rows));
                            diff::backward(loss);
                            opt.step();
                            return std::map<std::string, double>{{"bce", scalar(loss)}};
                          });

  const auto val_idx = data.indices(Split::validation);
  if (!val_idx.empty()) {
    const auto prob = classifier_probabilities(net, data, val_idx, stats);
    std::vector<std::uint8_t> truth(val_idx.size());
    for (std::size_t i = 0; i < val_idx.size(); ++i) truth[i] = data.is_zero(val_idx[i]) ? 0 : 1;
    const bool both = std::any_of(truth.begin(), truth.end(), [](auto v) { return v == 1; }) &&
                      std::any_of(truth.begin(), truth.end(), [](auto v) { return v == 0; });
    if (both) result.validation = metrics::classification_report(metrics::threshold_labels(prob), truth);
  }
  return result;
}

std::vector<float> classifier_probabilities(const models::ClassifierNet& net, const SampleSet& data,
                                            std::span<const std::size_t> idx, const NormalizationStats& stats) {
  std::vector<float> out;
  out.reserve(idx.size());
  for (std::size_t lo = 0; lo < idx.size(); lo += kEvalBatch) {
    const auto rows = idx.subspan(lo, std::min(kEvalBatch, idx.size() - lo));
    const Batchable in = prepare(data, rows, stats, false);
    const Var p = net.forward(Var::constant(in.cond));
    out.insert(out.end(), p.value().values().begin(), p.value().values().end());
  }
  return out;
}

RegressorResult pretrain_regressor(const SampleSet& data, const NormalizationStats& stats, const TrainConfig& cfg,
                                   const EpochCallback& on_epoch) {
  cfg.validate();
  const auto train_idx = nonzero_train(data, "regressor");
  const Batchable in = prepare(data, train_idx, stats);

  RegressorResult result{models::RegressorNet(cfg.seed), {}, 0.0};
  auto& net = result.net;
  Adam opt(net.params().trainable(), optimizer(cfg, 1e-3f, 0.9f));
  result.log = run_epochs("regressor", cfg, train_idx.size(), on_epoch,
                          [&](std::span<const std::size_t> rows, int epoch, std::size_t batch) {
                            opt.zero_grad();
                            Rng drop = batch_rng(cfg, Stream::dropout, epoch, batch);
                            const Var pred =
                                net.forward(Var::constant(gather_rows(in.image, rows)), {Mode::train, &drop});
                            const Var loss = diff::mse(pred, Var::constant(gather_rows(in.coords, rows)));
                            diff::backward(loss);
                            opt.step();
                            return std::map<std::string, double>{{"mse", scalar(loss)}};
                          });
  net.params().set_trainable(false);

  const auto val_idx = data.indices(Split::validation, true);
  if (!val_idx.empty()) result.validation_mae = regressor_mae(net, data, val_idx, stats);
  return result;
}

double regressor_mae(const models::RegressorNet& net, const SampleSet& data, std::span<const std::size_t> idx,
                     const NormalizationStats& stats) {
  require(!idx.empty(), "regressor_mae needs samples");
  double err = 0.0;
  for (std::size_t lo = 0; lo < idx.size(); lo += kEvalBatch) {
    const auto rows = idx.subspan(lo, std::min(kEvalBatch, idx.size() - lo));
    const Batchable in = prepare(data, rows, stats);
    const Var pred = net.forward(Var::constant(in.image));
    for (std::size_t k = 0; k < in.coords.size(); ++k) err += std::abs(pred.value()[k] - in.coords[k]);
  }
  return err / static_cast<double>(2 * idx.size());
}

VaeResult train_vae(const SampleSet& data, const NormalizationStats& stats, const TrainConfig& cfg,
                    const EpochCallback& on_epoch) {
  cfg.validate();
  const auto train_idx = nonzero_train(data, "VAE");
  const Batchable in = prepare(data, train_idx, stats);

  VaeResult result{models::EncoderNet(cfg.seed), models::DecoderNet(cfg.seed), {}};
  auto params = result.encoder.params().trainable();
  for (const auto& v : result.decoder.params().trainable()) params.push_back(v);
  Adam opt(params, optimizer(cfg, 1e-3f, 0.9f));
  const auto beta_kl = static_cast<float>(cfg.beta_kl);

  result.log = run_epochs(
      "vae", cfg, train_idx.size(), on_epoch, [&](std::span<const std::size_t> rows, int epoch, std::size_t batch) {
        opt.zero_grad();
        const Var x = Var::constant(gather_rows(in.image, rows));
        const Var c = Var::constant(gather_rows(in.cond, rows));
        const auto enc = result.encoder.forward(x, c, {Mode::train});
        Rng latent = batch_rng(cfg, Stream::latent, epoch, batch);
        const Tensor eps = standard_normal(enc.mu.shape(), latent);
        const Var z = diff::reparameterize(enc.mu, enc.logvar, eps);
        const Var recon = diff::mse(result.decoder.forward(z, c, {Mode::train}), x);
        const Var kl = diff::kl_diag_gauss(enc.mu, enc.logvar);
        const Var loss = diff::add(recon, diff::scale(kl, beta_kl));
        diff::backward(loss);
        opt.step();
        return std::map<std::string, double>{{"reconstruction", scalar(recon)}, {"kl", scalar(kl)},
                                             {"total", scalar(loss)}};
      });
  return result;
}

GanResult train_gan(const SampleSet& data, const NormalizationStats& stats, const TrainConfig& cfg,
                    const models::RegressorNet* regressor, const EpochCallback& on_epoch) {
  cfg.validate();
  const auto train_idx = nonzero_train(data, "GAN");
  const Batchable in = prepare(data, train_idx, stats);

  GanResult result{models::GeneratorNet(cfg.seed), models::DiscriminatorNet(cfg.seed), {}};
  auto& gen = result.generator;
  auto& disc = result.discriminator;
  Adam opt_g(gen.params().trainable(), optimizer(cfg, 2e-4f, 0.5f));
  Adam opt_d(disc.params().trainable(), optimizer(cfg, 2e-4f, 0.5f));
  const auto lambda = static_cast<float>(cfg.lambda_aux);

  result.log = run_epochs(
      regressor != nullptr ? "gan_aux" : "gan", cfg, train_idx.size(), on_epoch,
      [&](std::span<const std::size_t> rows, int epoch, std::size_t batch) {
        const auto b = static_cast<std::int64_t>(rows.size());
        const Var x = Var::constant(gather_rows(in.image, rows));
        const Var c = Var::constant(gather_rows(in.cond, rows));
        Rng noise = batch_rng(cfg, Stream::noise, epoch, batch);
        Rng drop = batch_rng(cfg, Stream::dropout, epoch, batch);
        const Var z = Var::constant(standard_normal({b, models::kLatentDim}, noise));
        const Var fake = gen.forward(z, c, {Mode::train, &drop});

        opt_d.zero_grad();
        const Var d_real = diff::bce(disc.forward(x, c, {Mode::train, &drop}), Tensor({b, 1}, 1.0f));
        const Var d_fake = diff::bce(disc.forward(fake.detach(), c, {Mode::train, &drop}), Tensor({b, 1}, 0.0f));
        const Var d_loss = diff::add(d_real, d_fake);
        diff::backward(d_loss);
        opt_d.step();

        opt_g.zero_grad();
        disc.params().set_trainable(false);
        const Var g_adv = diff::bce(disc.forward(fake, c, {Mode::train, &drop}), Tensor({b, 1}, 1.0f));
        std::map<std::string, double> losses{{"d_loss", scalar(d_loss)}, {"g_adv", scalar(g_adv)}};
        Var g_loss = g_adv;
        if (regressor != nullptr) {
          const Var target = Var::constant(gather_rows(in.coords, rows));
          // lambda = 0 keeps the plain objective exactly; the term is still logged.
          const Var aux = diff::mse(regressor->forward(lambda > 0.0f ? fake : fake.detach()), target);
          if (lambda > 0.0f) g_loss = diff::add(g_adv, diff::scale(aux, lambda));
          losses["aux"] = scalar(aux);
        }
        diff::backward(g_loss);
        disc.params().set_trainable(true);
        opt_g.step();
        losses["g_loss"] = scalar(g_loss);
        return losses;
      });
  return result;
}

}  // namespace zdc::training
