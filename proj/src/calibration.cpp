#include "zdc/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "zdc/errors.hpp"
#include "zdc/random.hpp"

namespace zdc::calibration {

using diff::Tensor;
using diff::Var;

namespace {

Tensor conditions(std::span<const ParticleRecord> particles, const NormalizationStats& stats) {
  Tensor t({static_cast<std::int64_t>(particles.size()), models::kCondDim});
  for (std::size_t r = 0; r < particles.size(); ++r) {
    const auto c = stats.standardize(particles[r]);
    std::copy(c.begin(), c.end(), t.data() + r * kNumAttributes);
  }
  return t;
}

template <class Net>
std::vector<float> generate_batched(const Net& net, const NormalizationStats& stats,
                                    std::span<const ParticleRecord> particles, std::span<const std::size_t> noise_index,
                                    double sigma, std::uint64_t seed) {
  require(!particles.empty(), "no conditions to generate for");
  require(particles.size() == noise_index.size(), "one noise index per particle is required");
  require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be finite and non-negative");
  std::vector<float> out;
  out.reserve(particles.size() * kGridPixels);
  for (std::size_t lo = 0; lo < particles.size(); lo += kGenerationBatch) {
    const std::size_t n = std::min(kGenerationBatch, particles.size() - lo);
    const Var y = net.forward(Var::constant(latent_noise(noise_index.subspan(lo, n), sigma, seed)),
                              Var::constant(conditions(particles.subspan(lo, n), stats)));
    const auto counts = to_counts(y.value(), stats);
    out.insert(out.end(), counts.begin(), counts.end());
  }
  return out;
}

void check_grid(std::span<const double> grid, bool positive, const char* what) {
  if (grid.empty()) throw ValidationError(std::string(what) + " grid is empty");
  for (double v : grid) {
    if (!std::isfinite(v) || v < 0.0 || (positive && v == 0.0))
      throw ValidationError(std::string(what) + " grid values must be finite and " +
                            (positive ? "positive" : "non-negative"));
  }
}

std::vector<ChannelVector> real_channels(const SampleSet& data, std::span<const std::size_t> idx) {
  require(!idx.empty(), "calibration needs at least one sample");
  std::vector<ChannelVector> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(extract_channels(data.response(i)));
  return out;
}

}  // namespace

Tensor latent_noise(std::span<const std::size_t> idx, double sigma, std::uint64_t seed) {
  Tensor z({static_cast<std::int64_t>(idx.size()), models::kLatentDim});
  const auto s = static_cast<float>(sigma);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    Rng rng = make_rng(seed, Stream::noise, idx[r]);
    std::normal_distribution<float> nd(0.0f, 1.0f);
    for (std::int64_t k = 0; k < models::kLatentDim; ++k) z[r * models::kLatentDim + k] = s * nd(rng);
  }
  return z;
}

std::vector<float> to_counts(const Tensor& normalized, const NormalizationStats& stats) {
  std::vector<float> out(normalized.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = stats.denormalize_pixel(std::max(normalized[k], 0.0f));
    if (!std::isfinite(out[k])) throw NumericError("generated photon count overflowed");
  }
  return out;
}

std::vector<float> ConditionalSampler::generate(const SampleSet& data, std::span<const std::size_t> idx,
                                                double sigma, std::uint64_t seed) const {
  std::vector<ParticleRecord> particles;
  particles.reserve(idx.size());
  for (auto i : idx) particles.push_back(data.particle(i));
  return generate_for(particles, idx, sigma, seed);
}

std::vector<float> GeneratorSampler::generate_for(std::span<const ParticleRecord> particles,
                                                  std::span<const std::size_t> noise_index, double sigma,
                                                  std::uint64_t seed) const {
  return generate_batched(net_, stats_, particles, noise_index, sigma, seed);
}

std::vector<float> DecoderSampler::generate_for(std::span<const ParticleRecord> particles,
                                                std::span<const std::size_t> noise_index, double sigma,
                                                std::uint64_t seed) const {
  return generate_batched(net_, stats_, particles, noise_index, sigma, seed);
}

std::vector<float> ReplaySampler::generate(const SampleSet& data, std::span<const std::size_t> idx, double,
                                           std::uint64_t) const {
  require(!idx.empty(), "no conditions to generate for");
  std::vector<float> out;
  out.reserve(idx.size() * kGridPixels);
  for (auto i : idx) {
    for (float v : data.response(i)) out.push_back(static_cast<float>(v * scale_));
  }
  return out;
}

std::vector<double> default_sigma_grid() { return {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0}; }

std::vector<double> default_multiplier_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 20; ++i) g.push_back((90 + i) / 100.0);
  return g;
}

double argmin_score(std::span<const ScoreEntry> table) {
  require(!table.empty(), "empty score table");
  const ScoreEntry* best = &table[0];
  for (const auto& e : table) {
    if (e.mean_w1 < best->mean_w1 || (e.mean_w1 == best->mean_w1 && e.value < best->value)) best = &e;
  }
  return best->value;
}

SearchResult calibrate_sigma(const Sampler& sampler, const SampleSet& data, std::span<const std::size_t> idx,
                             std::span<const double> sigma_grid, const CalibrationConfig& cfg) {
  check_grid(sigma_grid, false, "sigma");
  const auto real = real_channels(data, idx);
  SearchResult result;
  for (double sigma : sigma_grid) {
    const auto generated = metrics::channels_of(sampler.generate(data, idx, sigma, cfg.seed));
    result.table.push_back({sigma, metrics::channel_wasserstein(real, generated).mean});
  }
  result.best = argmin_score(result.table);
  return result;
}

SearchResult calibrate_multiplier(const Sampler& sampler, const SampleSet& data, std::span<const std::size_t> idx,
                                  std::span<const double> c_grid, double sigma, const CalibrationConfig& cfg) {
  check_grid(c_grid, true, "multiplier");
  const auto real = real_channels(data, idx);
  const auto counts = sampler.generate(data, idx, sigma, cfg.seed);
  SearchResult result;
  std::vector<float> scaled(counts.size());
  for (double c : c_grid) {
    std::copy(counts.begin(), counts.end(), scaled.begin());
    apply_postprocessing(scaled, c);
    result.table.push_back({c, metrics::channel_wasserstein(real, metrics::channels_of(scaled)).mean});
  }
  result.best = argmin_score(result.table);
  return result;
}

const ScoreEntry* CalibrationResult::find(std::span<const ScoreEntry> table, double value) {
  for (const auto& e : table) {
    if (e.value == value) return &e;
  }
  return nullptr;
}

CalibrationResult calibrate(const Sampler& sampler, const SampleSet& data, std::span<const std::size_t> idx,
                            std::span<const double> sigma_grid, std::span<const double> c_grid,
                            const CalibrationConfig& cfg) {
  const auto sigma = calibrate_sigma(sampler, data, idx, sigma_grid, cfg);
  const auto mult = calibrate_multiplier(sampler, data, idx, c_grid, sigma.best, cfg);
  CalibrationResult r;
  r.sigma_star = sigma.best;
  r.sigma_table = sigma.table;
  r.c_star = mult.best;
  r.c_table = mult.table;
  r.n_eval_samples = idx.size();
  r.seed = cfg.seed;
  return r;
}

ResponseGrid apply_postprocessing(const ResponseGrid& grid, double c) {
  ResponseGrid out = grid;
  apply_postprocessing(out.values, c);
  return out;
}

void apply_postprocessing(std::span<float> pixels, double c) {
  if (!std::isfinite(c) || c <= 0.0) throw ValidationError("multiplier c must be positive and finite");
  for (float& v : pixels) v = static_cast<float>(v * c);
}

}  // namespace zdc::calibration
