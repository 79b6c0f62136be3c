#include "zdc/pipeline/simulation.hpp"

#include <algorithm>
#include <chrono>

#include "zdc/errors.hpp"
#include "zdc/pipeline/binary_io.hpp"
#include "zdc/synthetic_oracle.hpp"

namespace zdc::pipeline {

using diff::Tensor;
using diff::Var;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void check_threshold(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("classifier threshold must lie in [0, 1]");
}

std::vector<double> channel_column(std::span<const ChannelVector> v, std::size_t k) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& c : v) out.push_back(c.ch[k]);
  return out;
}

json write_histograms(const fs::path& dir, const std::string& prefix, std::span<const ChannelVector> real,
                      std::span<const ChannelVector> gen, int bins) {
  fs::create_directories(dir);
  json files = json::array();
  for (std::size_t k = 0; k < kNumChannels; ++k) {
    const auto a = channel_column(real, k);
    const auto b = channel_column(gen, k);
    double hi = 0.0;
    for (double v : a) hi = std::max(hi, v);
    for (double v : b) hi = std::max(hi, v);
    if (hi <= 0.0) hi = 1.0;
    for (const auto& [tag, values] : {std::pair{"real", &a}, std::pair{"generated", &b}}) {
      const fs::path file = dir / (prefix + "_" + kChannelNames[k] + "_" + tag + ".csv");
      write_text(file, metrics::histogram_csv(*values, bins, 0.0, hi));
      files.push_back(file.filename().string());  // relative, so reports do not depend on the output location
    }
  }
  return files;
}

}  // namespace

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  throw ValidationError("split must be 'train' or 'validation', got '" + s + "'");
}

std::vector<float> gate_probabilities(const ModelBundle& classifier, std::span<const ParticleRecord> particles) {
  require(classifier.classifier != nullptr, "gate needs a classifier model");
  std::vector<float> out;
  out.reserve(particles.size());
  for (std::size_t lo = 0; lo < particles.size(); lo += calibration::kGenerationBatch) {
    const std::size_t n = std::min(calibration::kGenerationBatch, particles.size() - lo);
    Tensor cond({static_cast<std::int64_t>(n), models::kCondDim});
    for (std::size_t r = 0; r < n; ++r) {
      const auto c = classifier.stats.standardize(particles[lo + r]);
      std::copy(c.begin(), c.end(), cond.data() + r * kNumAttributes);
    }
    const Var p = classifier.classifier->forward(Var::constant(std::move(cond)));
    out.insert(out.end(), p.value().values().begin(), p.value().values().end());
  }
  return out;
}

SimulationOutput simulate(std::span<const ParticleRecord> particles, const ModelBundle& classifier,
                          const ModelBundle& model, const SimulateOptions& opts) {
  check_threshold(opts.threshold);
  const double c = opts.multiplier.value_or(model.multiplier());
  const double sigma = opts.sigma.value_or(model.sigma());
  SimulationOutput out;
  out.responses.assign(particles.size() * kGridPixels, 0.0f);
  if (particles.empty()) return out;
  out.probabilities = gate_probabilities(classifier, particles);

  std::vector<std::size_t> active;
  std::vector<ParticleRecord> selected;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    if (out.probabilities[i] < opts.threshold) continue;
    active.push_back(i);
    selected.push_back(particles[i]);
  }
  out.zero_count = particles.size() - active.size();
  if (active.empty()) return out;

  auto counts = model.sampler()->generate_for(selected, active, sigma, opts.seed);
  calibration::apply_postprocessing(counts, c);
  for (std::size_t r = 0; r < active.size(); ++r) {
    std::copy_n(counts.data() + r * kGridPixels, kGridPixels, out.responses.data() + active[r] * kGridPixels);
  }
  return out;
}

std::vector<std::size_t> evaluation_indices(const SampleSet& data, Split split, std::size_t max_samples) {
  auto idx = data.indices(split, true);
  if (max_samples > 0 && idx.size() > max_samples) idx.resize(max_samples);
  return idx;
}

Evaluation evaluate(const DatasetFiles& ds, const ModelBundle* model, const ModelBundle* classifier,
                    const std::vector<float>* generated, const EvaluateOptions& opts) {
  require(model != nullptr || generated != nullptr || classifier != nullptr, "nothing to evaluate");
  check_threshold(opts.threshold);
  const auto start = std::chrono::steady_clock::now();
  const SampleSet& data = ds.data;
  Evaluation ev;
  json& r = ev.report;
  r["dataset"] = ds.manifest.id;
  r["split"] = opts.split == Split::train ? "train" : "validation";
  r["seed"] = opts.seed;
  r["code_version"] = ZDC_VERSION;

  if (model != nullptr || generated != nullptr) {
    const auto idx = evaluation_indices(data, opts.split, opts.max_samples);
    if (idx.empty()) throw ValidationError("the split holds no non-zero responses to compare");
    std::vector<float> gen;
    double c = 1.0, sigma = 1.0;
    if (generated != nullptr) {
      if (generated->size() != data.size() * kGridPixels)
        throw ValidationError("generated responses must have one 1936-pixel row per dataset sample");
      gen.reserve(idx.size() * kGridPixels);
      for (auto i : idx) gen.insert(gen.end(), generated->begin() + i * kGridPixels, generated->begin() + (i + 1) * kGridPixels);
      r["model"] = "external-responses";
    } else {
      require(model->generative(), to_string(model->kind) + " model cannot generate responses");
      if (opts.postprocess) {
        c = model->multiplier();
        sigma = model->sigma();
      }
      gen = model->sampler()->generate(data, idx, sigma, opts.seed);
      calibration::apply_postprocessing(gen, c);
      r["model"] = model_id(*model);
      r["model_kind"] = to_string(model->kind);
    }
    ev.generated = idx.size();
    r["postprocessed"] = generated == nullptr && opts.postprocess;
    r["multiplier"] = c;
    r["sigma"] = sigma;
    std::vector<ChannelVector> real;
    real.reserve(idx.size());
    for (auto i : idx) real.push_back(extract_channels(data.response(i)));
    const auto gen_ch = metrics::channels_of(gen);
    r["wasserstein"] = to_json(metrics::channel_wasserstein(real, gen_ch));
    if (!opts.hist_dir.empty()) {
      const std::string prefix = model != nullptr && generated == nullptr ? to_string(model->kind) : "external";
      r["histograms"] = write_histograms(opts.hist_dir, prefix, real, gen_ch, opts.bins);
    }
  }

  if (classifier != nullptr) {
    const auto idx = data.indices(opts.split);
    std::vector<ParticleRecord> particles;
    std::vector<std::uint8_t> truth;
    for (auto i : idx) {
      particles.push_back(data.particle(i));
      truth.push_back(data.is_zero(i) ? 0 : 1);
    }
    const auto prob = gate_probabilities(*classifier, particles);
    json block = to_json(metrics::classification_report(metrics::threshold_labels(prob, opts.threshold), truth));
    block["classifier"] = model_id(*classifier);
    block["threshold"] = opts.threshold;
    r["classification"] = block;
  }
  ev.seconds = seconds_since(start);
  return ev;
}

BenchmarkResult benchmark(const ModelBundle& model, const ModelBundle& classifier, std::size_t n, std::uint64_t seed) {
  require(n > 0, "benchmark needs at least one particle");
  const OracleConfig oc;
  std::vector<ParticleRecord> particles;
  particles.reserve(n);
  std::size_t truly_zero = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, Stream::benchmark, i);
    particles.push_back(sample_particle(rng, oc));
    truly_zero += oracle_is_zero(particles.back(), oc);
  }
  SimulateOptions opts;
  opts.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  const auto out = simulate(particles, classifier, model, opts);
  const double seconds = seconds_since(start);

  BenchmarkResult b;
  b.report = {{"model", model_id(model)},
              {"classifier", model_id(classifier)},
              {"n", n},
              {"outputs", out.responses.size() / kGridPixels},
              {"zero_outputs", out.zero_count},
              {"simulated_zero_fraction", static_cast<double>(out.zero_count) / static_cast<double>(n)},
              {"oracle_zero_fraction", static_cast<double>(truly_zero) / static_cast<double>(n)},
              {"seed", seed},
              {"code_version", ZDC_VERSION}};
  b.timing = {{"wall_seconds", seconds}, {"samples_per_sec", static_cast<double>(n) / std::max(seconds, 1e-9)}};
  return b;
}

void write_timing(const fs::path& path, const json& timing) {
  fs::path p = path;
  p += ".timing.json";
  write_text(p, dump(timing));
}

}  // namespace zdc::pipeline
