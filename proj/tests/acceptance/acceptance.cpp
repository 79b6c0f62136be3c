// Acceptance runner: one PASS/FAIL line per criterion. Run without arguments
// for the whole set, or with --only c1,c5,... for a subset.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "zdc/calibration.hpp"
#include "zdc/diff/ops.hpp"
#include "zdc/errors.hpp"
#include "zdc/metrics.hpp"
#include "zdc/models.hpp"
#include "zdc/pipeline/binary_io.hpp"
#include "zdc/pipeline/recipe.hpp"
#include "zdc/response_model.hpp"
#include "zdc/synthetic_oracle.hpp"
#include "zdc/training.hpp"

using namespace zdc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using pipeline::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Accumulates named checks; the first failures are kept for the summary line.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok) {
      ++failed_;
      if (failures_.size() < 4) failures_.push_back(what);
    }
  }
  Outcome outcome(const std::string& summary) const {
    Outcome o{failed_ == 0, summary};
    if (failed_ > 0) {
      o.detail += "; " + std::to_string(failed_) + "/" + std::to_string(total_) + " checks failed:";
      for (const auto& f : failures_) o.detail += " [" + f + "]";
    }
    return o;
  }

 private:
  int total_ = 0;
  int failed_ = 0;
  std::vector<std::string> failures_;
};

std::string fmt(double v, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Context {
  fs::path work;
  fs::path zdcsim;
  fs::path recipe_dir;
};

// ---------------------------------------------------------------- c1

Outcome gradient_correctness(const Context&) {
  using namespace diff;
  using zdc::testing::away_from_zero;
  using zdc::testing::Builder;
  using zdc::testing::check_gradients;
  using zdc::testing::random_tensor;
  const auto start = Clock::now();
  Checks checks;
  double worst = 0.0;
  std::string worst_op;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    auto run = [&](const std::string& op, const Builder& b, const std::vector<Tensor>& in) {
      const double e = check_gradients(b, in, seed).max_relative_error;
      if (e > worst) {
        worst = e;
        worst_op = op;
      }
      checks.expect(e <= 1e-3, op + " seed " + std::to_string(seed) + " rel err " + fmt(e));
    };
    run("dense", [](const std::vector<Var>& v) { return dense(v[0], v[1], v[2]); },
        {random_tensor({3, 4}, rng), random_tensor({4, 5}, rng), random_tensor({5}, rng)});
    run("conv2d same/2", [](const std::vector<Var>& v) { return conv2d(v[0], v[1], v[2], 2, Padding::same); },
        {random_tensor({2, 2, 5, 5}, rng), random_tensor({3, 2, 4, 4}, rng), random_tensor({3}, rng)});
    run("conv2d same/1", [](const std::vector<Var>& v) { return conv2d(v[0], v[1], v[2], 1, Padding::same); },
        {random_tensor({2, 2, 4, 4}, rng), random_tensor({2, 2, 4, 4}, rng), random_tensor({2}, rng)});
    run("conv2d valid/1", [](const std::vector<Var>& v) { return conv2d(v[0], v[1], v[2], 1, Padding::valid); },
        {random_tensor({1, 1, 5, 5}, rng), random_tensor({2, 1, 3, 3}, rng), random_tensor({2}, rng)});
    run("upsample_nearest2x", [](const std::vector<Var>& v) { return upsample_nearest2x(v[0]); },
        {random_tensor({2, 2, 3, 3}, rng)});
    for (auto pad : {Padding::same, Padding::valid}) {
      run(pad == Padding::same ? "upsample_conv2d same" : "upsample_conv2d valid",
          [pad](const std::vector<Var>& v) { return upsample_conv2d(v[0], v[1], v[2], pad); },
          {random_tensor({1, 2, 3, 3}, rng), random_tensor({2, 2, 3, 3}, rng), random_tensor({2}, rng)});
    }
    const Tensor x = away_from_zero(random_tensor({4, 6}, rng, -3.0f, 3.0f), 0.01f);
    run("relu", [](const std::vector<Var>& v) { return relu(v[0]); }, {x});
    run("leaky_relu", [](const std::vector<Var>& v) { return leaky_relu(v[0], 0.2f); }, {x});
    run("sigmoid", [](const std::vector<Var>& v) { return sigmoid(v[0]); }, {x});
    run("batchnorm train",
        [](const std::vector<Var>& v) {
          Tensor rm({3}), rv({3}, 1.0f);
          return batchnorm(v[0], v[1], v[2], rm, rv, Mode::train);
        },
        {random_tensor({2, 3, 4, 4}, rng), random_tensor({3}, rng, 0.5f, 1.5f), random_tensor({3}, rng)});
    const Tensor rm = random_tensor({3}, rng), rv = random_tensor({3}, rng, 0.5f, 2.0f);
    run("batchnorm infer",
        [&](const std::vector<Var>& v) {
          Tensor m = rm, s = rv;
          return batchnorm(v[0], v[1], v[2], m, s, Mode::infer);
        },
        {random_tensor({2, 3, 2, 2}, rng), random_tensor({3}, rng, 0.5f, 1.5f), random_tensor({3}, rng)});
    run("dropout",
        [seed](const std::vector<Var>& v) {
          Rng local(seed);
          return dropout(v[0], 0.3f, Mode::train, local);
        },
        {random_tensor({4, 8}, rng)});
    run("concat/reshape/flatten",
        [](const std::vector<Var>& v) { return reshape(concat(flatten(v[0]), v[1]), {2, 2, 7}); },
        {random_tensor({2, 2, 2, 2}, rng), random_tensor({2, 6}, rng)});
    const Tensor target({3, 1}, {1.0f, 0.0f, 1.0f});
    run("bce", [&](const std::vector<Var>& v) { return bce(v[0], target); }, {random_tensor({3, 1}, rng, 0.1f, 0.9f)});
    run("mse", [](const std::vector<Var>& v) { return mse(v[0], v[1]); },
        {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});
    run("kl_diag_gauss", [](const std::vector<Var>& v) { return kl_diag_gauss(v[0], v[1]); },
        {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)});
    const Tensor eps = random_tensor({2, 5}, rng);
    run("reparameterize/add/scale",
        [&](const std::vector<Var>& v) { return scale(add(reparameterize(v[0], v[1], eps), v[0]), 1.7f); },
        {random_tensor({2, 5}, rng), random_tensor({2, 5}, rng)});
    const Tensor w = random_tensor({3, 4}, rng);
    run("weighted_sum", [&](const std::vector<Var>& v) { return weighted_sum(v[0], w); }, {random_tensor({3, 4}, rng)});
  }
  const double secs = seconds_since(start);
  checks.expect(secs < 120.0, "suite took " + fmt(secs) + " s");
  return checks.outcome("max rel err " + fmt(worst) + " (" + worst_op + "), " + fmt(secs, "%.1f") + " s");
}

// ---------------------------------------------------------------- c2

Outcome wasserstein_oracle(const Context&) {
  Checks checks;
  const std::vector<double> a{0, 0, 0, 1}, b{0, 1};
  const double quarter = metrics::wasserstein1d(a, b);
  checks.expect(quarter == 0.25, "{0,0,0,1} vs {0,1} = " + fmt(quarter, "%.17g"));
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int unequal = 0;
  for (int t = 0; t < 100; ++t) {
    std::uniform_int_distribution<int> size(1, 60);
    const int na = size(rng);
    const int nb = t % 4 == 0 ? na : size(rng);
    unequal += na != nb;
    std::normal_distribution<double> da(0.0, 1.0), db(0.5, 2.0);
    std::vector<double> x(static_cast<std::size_t>(na)), y(static_cast<std::size_t>(nb));
    for (auto& v : x) v = t % 3 == 0 ? std::round(da(rng)) : da(rng);
    for (auto& v : y) v = db(rng);
    const double got = metrics::wasserstein1d(x, y);
    const double want = zdc::testing::quantile_integral_w1(x, y);
    const double err = std::abs(got - want);
    worst = std::max(worst, err);
    checks.expect(err <= 1e-9, "pair " + std::to_string(t) + " error " + fmt(err));
  }
  checks.expect(unequal > 50, "too few unequal-size pairs");
  return checks.outcome("100 pairs (" + std::to_string(unequal) + " unequal sizes), max |diff| " + fmt(worst) +
                        ", quarter case " + fmt(quarter));
}

// ---------------------------------------------------------------- c3

Outcome channel_masks_exact(const Context&) {
  Checks checks;
  const auto m = channel_masks();
  const std::size_t expected[kNumChannels] = {968, 242, 242, 242, 242};
  for (std::size_t k = 0; k < kNumChannels; ++k) {
    std::size_t count = 0;
    for (bool b : m.masks[k]) count += b;
    checks.expect(count == expected[k], std::string(kChannelNames[k]) + " has " + std::to_string(count) + " pixels");
  }
  for (std::size_t p = 0; p < kGridPixels; ++p) {
    int owners = 0;
    for (std::size_t k = 0; k < kNumChannels; ++k) owners += m.masks[k][p];
    checks.expect(owners == 1, "pixel " + std::to_string(p) + " has " + std::to_string(owners) + " owners");
  }
  ResponseGrid ones;
  ones.values.fill(1.0f);
  const auto ch = extract_channels(ones);
  checks.expect(ch.ch == std::array<double, kNumChannels>{968, 242, 242, 242, 242}, "all-ones channels");
  return checks.outcome("counts 968/242x4, disjoint, covering 1936 pixels, all-ones = [968,242,242,242,242]");
}

// ---------------------------------------------------------------- c4

Outcome shape_conformance(const Context&) {
  using models::Trace;
  Checks checks;
  const std::int64_t b = 3;
  Rng rng(1);
  auto find = [](const Trace& t, const std::string& label) -> diff::Shape {
    for (const auto& e : t)
      if (e.label == label) return e.shape;
    return {};
  };
  auto img = diff::Var::constant(diff::Tensor({b, 1, 44, 44}, 0.5f));
  auto cond = diff::Var::constant(diff::Tensor({b, models::kCondDim}, 0.1f));
  auto z = diff::Var::constant(diff::Tensor({b, models::kLatentDim}, 0.2f));

  Trace te;
  const auto enc = models::EncoderNet(1).forward(img, cond, {diff::Mode::infer, nullptr, &te});
  checks.expect(find(te, "flatten") == diff::Shape{b, 4608}, "encoder flatten");
  checks.expect(enc.mu.shape() == diff::Shape{b, 10} && enc.logvar.shape() == diff::Shape{b, 10}, "encoder heads");

  Trace td;
  const auto dec = models::DecoderNet(1).forward(z, cond, {diff::Mode::infer, nullptr, &td});
  checks.expect(find(td, "reshape") == diff::Shape{b, 128, 6, 6}, "decoder reshape");
  checks.expect(dec.shape() == diff::Shape{b, 1, 44, 44}, "decoder output 44x44");

  Trace tg;
  const auto gen = models::GeneratorNet(1).forward(z, cond, {diff::Mode::train, &rng, &tg});
  checks.expect(find(tg, "dense1") == diff::Shape{b, 21632}, "generator dense 21632");
  checks.expect(find(tg, "reshape") == diff::Shape{b, 128, 13, 13}, "generator reshape 13x13x128");
  checks.expect(gen.shape() == diff::Shape{b, 1, 44, 44}, "generator output 44x44");

  const auto d = models::DiscriminatorNet(1).forward(img, cond, {diff::Mode::train, &rng});
  checks.expect(d.shape() == diff::Shape{b, 1}, "discriminator output");
  const auto c = models::ClassifierNet(1).forward(cond);
  checks.expect(c.shape() == diff::Shape{b, 1}, "classifier output");
  const auto r = models::RegressorNet(1).forward(img);
  checks.expect(r.shape() == diff::Shape{b, 2}, "regressor output");
  return checks.outcome("encoder flatten 4608, generator reshape 13x13x128, decoder/generator outputs 44x44");
}

// ---------------------------------------------------------------- c5

Outcome classifier_proxy(const Context&) {
  Checks checks;
  OracleConfig oc;
  oc.seed = 42;
  oc.n_samples = 20000;
  const auto data = generate_dataset(oc);
  const auto stats = NormalizationStats::fit(data);
  training::TrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 42;
  const auto r = training::train_classifier(data, stats, cfg);
  const auto& v = r.validation;
  checks.expect(v.accuracy >= 0.90, "accuracy " + fmt(v.accuracy));
  checks.expect(v.zero.f1 >= 0.88, "zero-class F1 " + fmt(v.zero.f1));
  checks.expect(v.nonzero.f1 >= 0.88, "non-zero-class F1 " + fmt(v.nonzero.f1));
  return checks.outcome("accuracy " + fmt(v.accuracy) + ", F1 zero " + fmt(v.zero.f1) + ", F1 non-zero " +
                        fmt(v.nonzero.f1) + " on " + std::to_string(v.zero.support + v.nonzero.support) +
                        " validation samples");
}

// ---------------------------------------------------------------- c6

Outcome calibration_dominance(const Context&) {
  Checks checks;
  OracleConfig oc;
  oc.seed = 6;
  const auto data = generate_nonzero_samples(oc, 320);
  const auto stats = NormalizationStats::fit(data);
  const auto idx = data.indices(Split::train, true);
  training::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 6;
  const auto gan = training::train_gan(data, stats, cfg);
  const auto vae = training::train_vae(data, stats, cfg);
  const calibration::GeneratorSampler gs(gan.generator, stats);
  const calibration::DecoderSampler ds(vae.decoder, stats);
  const calibration::ReplaySampler rs(1.0 / 1.05);
  const std::pair<const char*, const calibration::Sampler*> samplers[] = {{"gan", &gs}, {"vae", &ds}, {"replay", &rs}};
  std::ostringstream summary;
  for (const auto& [name, s] : samplers) {
    const auto r = calibration::calibrate(*s, data, idx, calibration::default_sigma_grid(),
                                          calibration::default_multiplier_grid(), {.seed = 6});
    const auto* c1 = calibration::CalibrationResult::find(r.c_table, 1.0);
    const auto* cs = calibration::CalibrationResult::find(r.c_table, r.c_star);
    const auto* s1 = calibration::CalibrationResult::find(r.sigma_table, 1.0);
    const auto* ss = calibration::CalibrationResult::find(r.sigma_table, r.sigma_star);
    checks.expect(c1 && cs && s1 && ss, std::string(name) + ": grid entries missing");
    if (!(c1 && cs && s1 && ss)) continue;
    checks.expect(cs->mean_w1 <= c1->mean_w1, std::string(name) + ": c* above c=1");
    checks.expect(ss->mean_w1 <= s1->mean_w1, std::string(name) + ": sigma* above sigma=1");
    summary << name << " c*=" << r.c_star << " (" << fmt(cs->mean_w1) << " <= " << fmt(c1->mean_w1) << "), sigma*="
            << r.sigma_star << " (" << fmt(ss->mean_w1) << " <= " << fmt(s1->mean_w1) << "); ";
  }
  return checks.outcome(summary.str() + std::to_string(idx.size()) + " calibration samples");
}

// ---------------------------------------------------------------- c7

Outcome inverse_scaling_probe(const Context&) {
  Checks checks;
  OracleConfig oc;
  oc.seed = 7;
  const auto data = generate_nonzero_samples(oc, 2000);
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const calibration::ReplaySampler stub(1.0 / 0.96);
  const auto start = Clock::now();
  const auto r = calibration::calibrate_multiplier(stub, data, idx, calibration::default_multiplier_grid(), 1.0);
  const double secs = seconds_since(start);
  checks.expect(r.best == 0.95 || r.best == 0.96 || r.best == 0.97, "c* = " + fmt(r.best));
  checks.expect(secs < 60.0, "took " + fmt(secs) + " s");

  // Independent scoring of the table: per-pixel channel sums and sorted pairing.
  const auto gen = stub.generate(data, idx, 1.0, 0);
  const auto masks = channel_masks();
  for (const auto& e : r.table) {
    double total = 0.0;
    for (std::size_t k = 0; k < kNumChannels; ++k) {
      std::vector<double> a, b;
      for (std::size_t s = 0; s < idx.size(); ++s) {
        double sa = 0.0, sb = 0.0;
        for (std::size_t p = 0; p < kGridPixels; ++p) {
          if (!masks.masks[k][p]) continue;
          sa += data.response(s)[p];
          sb += static_cast<float>(gen[s * kGridPixels + p] * e.value);
        }
        a.push_back(sa);
        b.push_back(sb);
      }
      total += zdc::testing::quantile_integral_w1(a, b);
    }
    const double want = total / kNumChannels;
    checks.expect(std::abs(want - e.mean_w1) <= 1e-9 * std::max(1.0, want), "table entry c=" + fmt(e.value));
  }
  return checks.outcome("c* = " + fmt(r.best, "%.2f") + " on 2000 samples in " + fmt(secs, "%.2f") + " s");
}

// ---------------------------------------------------------------- c8

bool all_finite(const training::TrainLog& log) {
  for (const auto& e : log.epochs)
    for (const auto& [name, v] : e.losses)
      if (!std::isfinite(v)) return false;
  return true;
}

Outcome training_sanity(const Context&) {
  Checks checks;
  OracleConfig oc;
  oc.seed = 42;
  const auto showers = generate_nonzero_samples(oc, 5000);
  const auto stats = NormalizationStats::fit(showers);
  training::TrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 42;
  std::ostringstream summary;
  auto decreasing = [&](const training::TrainLog& log, const std::string& loss) {
    const double first = log.loss(1, loss), last = log.loss(10, loss);
    checks.expect(all_finite(log), log.model + " has a non-finite loss");
    checks.expect(last < first, log.model + " " + loss + " " + fmt(first) + " -> " + fmt(last));
    summary << log.model << " " << loss << " " << fmt(first) << "->" << fmt(last) << "; ";
  };
  try {
    // The gate needs both classes, so the classifier sees an unfiltered draw of the same size.
    OracleConfig mixed = oc;
    mixed.n_samples = 5000;
    const auto gate_data = generate_dataset(mixed);
    const auto clf = training::train_classifier(gate_data, NormalizationStats::fit(gate_data), cfg);
    decreasing(clf.log, "bce");

    const auto reg = training::pretrain_regressor(showers, stats, cfg);
    decreasing(reg.log, "mse");
    checks.expect(reg.validation_mae <= 3.0, "regressor MAE " + fmt(reg.validation_mae));
    summary << "regressor MAE " << fmt(reg.validation_mae) << " px; ";

    const auto vae = training::train_vae(showers, stats, cfg);
    decreasing(vae.log, "total");

    const auto gan = training::train_gan(showers, stats, cfg, &reg.net);
    decreasing(gan.log, "aux");
  } catch (const NumericError& e) {
    checks.expect(false, std::string("NaN during training: ") + e.what());
  }
  return checks.outcome(summary.str());
}

// ---------------------------------------------------------------- recipe

json load_json(const fs::path& p) { return json::parse(pipeline::read_text(p)); }

/// Runs the desk-scale recipe unless `dir` already holds its report.
void ensure_recipe(const Context& ctx) {
  if (fs::exists(ctx.recipe_dir / "recipe_report.json") && fs::exists(ctx.recipe_dir / "recipe_report.json.timing.json"))
    return;
  pipeline::run_recipe(ctx.recipe_dir, pipeline::RecipeConfig{},
                       [](const std::string& m) { std::cerr << "  recipe: " << m << "\n"; });
}

Outcome ablation_report(const Context& ctx) {
  Checks checks;
  ensure_recipe(ctx);
  const json r = load_json(ctx.recipe_dir / "recipe_report.json");
  std::map<std::string, json> rows;
  for (const auto& row : r.at("rows")) rows[row.at("row").get<std::string>()] = row;
  for (const char* need : {"VAE", "DC-GAN", "DC-GAN+auxreg", "DC-GAN+auxreg+postproc"})
    checks.expect(rows.count(need) == 1, std::string("missing row ") + need);
  std::ostringstream summary;
  for (const auto& [base, post] : {std::pair{"VAE", "VAE+postproc"}, std::pair{"DC-GAN", "DC-GAN+postproc"},
                                   std::pair{"DC-GAN+auxreg", "DC-GAN+auxreg+postproc"}}) {
    if (!rows.count(base) || !rows.count(post)) {
      checks.expect(false, std::string("missing pair ") + base);
      continue;
    }
    const double u = rows[base].at("calibration_mean_w1").get<double>();
    const double p = rows[post].at("calibration_mean_w1").get<double>();
    checks.expect(std::isfinite(u) && std::isfinite(p) && p <= u, std::string(post) + " " + fmt(p) + " > " + fmt(u));
    summary << base << " " << fmt(u) << " -> " << fmt(p) << "; ";
  }
  const std::pair<const char*, double> refs[] = {
      {"VAE", 6.45}, {"DC-GAN", 8.25}, {"DC-GAN+auxreg", 7.20}, {"DC-GAN+postproc", 5.71}, {"DC-GAN+auxreg+postproc", 5.16}};
  for (const auto& [row, value] : refs) {
    checks.expect(rows.count(row) && rows[row].at("reference_mean_w1").is_number() &&
                      rows[row].at("reference_mean_w1").get<double>() == value,
                  std::string("reference value for ") + row);
  }
  return checks.outcome(summary.str() + "reference values documented");
}

// ---------------------------------------------------------------- c10

int run_cli(const Context& ctx, const std::string& args) {
  const std::string cmd = "\"" + ctx.zdcsim.string() + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

/// Every regular file under `dir` except timing sidecars, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.size() > 12 && name.ends_with(".timing.json")) continue;
    out[fs::relative(e.path(), dir).string()] = pipeline::read_text(e.path());
  }
  return out;
}

Outcome determinism(const Context& ctx) {
  Checks checks;
  std::ostringstream summary;
  if (ctx.zdcsim.empty() || !fs::exists(ctx.zdcsim)) {
    checks.expect(false, "zdcsim binary not found at '" + ctx.zdcsim.string() + "'");
    return checks.outcome("");
  }
  const std::vector<std::string> commands = {
      "gen-data --n 1500 --seed 7 --out {d}/data",
      "train-classifier --data {d}/data --epochs 2 --seed 3 --out {d}/clf.json",
      "train-regressor --data {d}/data --epochs 1 --max-samples 48 --seed 3 --out {d}/reg.json",
      "train-vae --data {d}/data --epochs 1 --max-samples 48 --seed 3 --out {d}/vae.json",
      "train-gan --data {d}/data --epochs 1 --max-samples 48 --seed 3 --out {d}/gan.json",
      "train-gan --data {d}/data --epochs 1 --max-samples 48 --seed 3 --aux-regressor {d}/reg.json --out "
      "{d}/gan_aux.json",
      "calibrate --model {d}/gan_aux.json --data {d}/data --samples 48 --seed 5 --out {d}/gan_cal.json",
      "calibrate --model {d}/vae.json --data {d}/data --samples 48 --seed 5 --sigmas 1,2 --out {d}/vae_cal.json",
      "evaluate --model {d}/gan_cal.json --classifier {d}/clf.json --data {d}/data --max-samples 40 --report "
      "{d}/eval.json --hist-dir {d}/hist",
      "simulate --model {d}/gan_cal.json --classifier {d}/clf.json --particles {d}/data/particles.f32 --threshold 0.2 "
      "--out {d}/sim.f32",
      "benchmark --model {d}/vae_cal.json --classifier {d}/clf.json --n 200 --report {d}/bench.json",
      "recipe --n 600 --gen-samples 24 --calib-samples 16 --eval-samples 8 --epochs 1 --classifier-epochs 1 --out "
      "{d}/recipe",
  };
  std::map<std::string, std::string> runs[2];
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path dir = ctx.work / ("determinism_" + std::to_string(rep));
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (const auto& c : commands) {
      std::string args = c;
      for (std::size_t p; (p = args.find("{d}")) != std::string::npos;) args.replace(p, 3, dir.string());
      const int rc = run_cli(ctx, args);
      checks.expect(rc == 0, "command failed: " + args.substr(0, args.find(' ')));
    }
    runs[rep] = snapshot(dir);
  }
  checks.expect(runs[0].size() == runs[1].size(), "different file sets");
  std::size_t identical = 0;
  for (const auto& [name, bytes] : runs[0]) {
    const auto it = runs[1].find(name);
    const bool same = it != runs[1].end() && it->second == bytes;
    identical += same;
    checks.expect(same, name + " differs");
  }
  summary << commands.size() << " commands twice, " << identical << "/" << runs[0].size() << " files byte-identical";

  ensure_recipe(ctx);
  const json timing = load_json(ctx.recipe_dir / "recipe_report.json.timing.json");
  const double secs = timing.at("total_seconds").get<double>();
  checks.expect(secs < 1800.0, "desk-scale recipe took " + fmt(secs) + " s");
  summary << "; desk-scale recipe " << fmt(secs / 60.0, "%.1f") << " min";
  return checks.outcome(summary.str());
}

struct Criterion {
  const char* id;
  const char* title;
  std::function<Outcome(const Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string only;
  Context ctx;
  std::string work = "acceptance_work", zdcsim, recipe_dir;
  app.add_option("--only", only, "Comma-separated criterion ids, e.g. c1,c4");
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--zdcsim", zdcsim, "Path to the zdcsim command-line tool");
  app.add_option("--recipe-dir", recipe_dir, "Desk-scale recipe output (run on demand when empty)");
  CLI11_PARSE(app, argc, argv);
  ctx.work = work;
  ctx.zdcsim = zdcsim;
  ctx.recipe_dir = recipe_dir.empty() ? ctx.work / "recipe" : fs::path(recipe_dir);
  fs::create_directories(ctx.work);

  const std::vector<Criterion> criteria = {
      {"c1", "gradient correctness", gradient_correctness},
      {"c2", "wasserstein oracle equivalence", wasserstein_oracle},
      {"c3", "channel masks", channel_masks_exact},
      {"c4", "shape conformance", shape_conformance},
      {"c5", "classifier desk-scale proxy", classifier_proxy},
      {"c6", "calibration dominance", calibration_dominance},
      {"c7", "inverse-scaling calibration probe", inverse_scaling_probe},
      {"c8", "training sanity", training_sanity},
      {"c9", "ablation report", ablation_report},
      {"c10", "determinism and recipe runtime", determinism},
  };
  std::vector<std::string> selected;
  std::stringstream ss(only);
  for (std::string id; std::getline(ss, id, ',');)
    if (!id.empty()) selected.push_back(id);

  int failures = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    ++ran;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.id << " " << c.title << ": " << o.detail << " ["
              << fmt(seconds_since(start), "%.1f") << " s]" << std::endl;
  }
  if (ran == 0) {
    std::cerr << "no criterion matches '" << only << "'\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
