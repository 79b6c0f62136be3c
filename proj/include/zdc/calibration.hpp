#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "zdc/dataset.hpp"
#include "zdc/metrics.hpp"
#include "zdc/models.hpp"

namespace zdc::calibration {

/// Produces one photon-count response per selected condition, as a flat
/// [idx.size() x 1936] block. The latent input of sample idx[r] is drawn from
/// (seed, Stream::noise, idx[r]) and scaled by sigma, so every sigma sees the
/// same underlying draws.
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual std::vector<float> generate(const SampleSet& data, std::span<const std::size_t> idx, double sigma,
                                      std::uint64_t seed) const = 0;
};

/// Network-backed sampler that only needs the conditions, so it can also run
/// on bare particle lists.
class ConditionalSampler : public Sampler {
 public:
  /// One response per particle; the noise of particle r is drawn from stream
  /// index noise_index[r].
  virtual std::vector<float> generate_for(std::span<const ParticleRecord> particles,
                                          std::span<const std::size_t> noise_index, double sigma,
                                          std::uint64_t seed) const = 0;
  std::vector<float> generate(const SampleSet& data, std::span<const std::size_t> idx, double sigma,
                              std::uint64_t seed) const override;
};

/// Conditional generator in inference mode.
class GeneratorSampler final : public ConditionalSampler {
 public:
  GeneratorSampler(const models::GeneratorNet& net, const NormalizationStats& stats) : net_(net), stats_(stats) {}
  std::vector<float> generate_for(std::span<const ParticleRecord> particles, std::span<const std::size_t> noise_index,
                                  double sigma, std::uint64_t seed) const override;

 private:
  const models::GeneratorNet& net_;
  const NormalizationStats& stats_;
};

/// VAE decoder driven by prior latents; the encoder is not used at inference.
class DecoderSampler final : public ConditionalSampler {
 public:
  DecoderSampler(const models::DecoderNet& net, const NormalizationStats& stats) : net_(net), stats_(stats) {}
  std::vector<float> generate_for(std::span<const ParticleRecord> particles, std::span<const std::size_t> noise_index,
                                  double sigma, std::uint64_t seed) const override;

 private:
  const models::DecoderNet& net_;
  const NormalizationStats& stats_;
};

/// Replays the real responses multiplied by `scale`, ignoring sigma. Used to
/// probe the search with a known answer.
class ReplaySampler final : public Sampler {
 public:
  explicit ReplaySampler(double scale = 1.0) : scale_(scale) {}
  std::vector<float> generate(const SampleSet& data, std::span<const std::size_t> idx, double sigma,
                              std::uint64_t seed) const override;

 private:
  double scale_;
};

inline constexpr std::size_t kGenerationBatch = 64;

/// Latent vectors [rows, kLatentDim] for the given sample indices.
diff::Tensor latent_noise(std::span<const std::size_t> idx, double sigma, std::uint64_t seed);

/// Maps network outputs (normalized log counts) back to photon counts.
std::vector<float> to_counts(const diff::Tensor& normalized, const NormalizationStats& stats);

std::vector<double> default_sigma_grid();
/// 0.90, 0.91, ..., 1.10.
std::vector<double> default_multiplier_grid();

struct ScoreEntry {
  double value = 0.0;
  double mean_w1 = 0.0;
  bool operator==(const ScoreEntry&) const = default;
};

struct SearchResult {
  double best = 0.0;
  std::vector<ScoreEntry> table;  // in grid order
};

struct CalibrationConfig {
  std::uint64_t seed = 42;
};

/// Picks the grid value minimizing the mean channel W1; ties go to the smaller value.
double argmin_score(std::span<const ScoreEntry> table);

/// Scores each sigma at c = 1 against the real responses of `idx`.
SearchResult calibrate_sigma(const Sampler& sampler, const SampleSet& data, std::span<const std::size_t> idx,
                             std::span<const double> sigma_grid, const CalibrationConfig& cfg = {});

/// Generates once at `sigma` and scores each multiplier applied to the counts.
SearchResult calibrate_multiplier(const Sampler& sampler, const SampleSet& data, std::span<const std::size_t> idx,
                                  std::span<const double> c_grid, double sigma, const CalibrationConfig& cfg = {});

struct CalibrationResult {
  double c_star = 1.0;
  double sigma_star = 1.0;
  std::vector<ScoreEntry> c_table;
  std::vector<ScoreEntry> sigma_table;
  std::size_t n_eval_samples = 0;
  std::uint64_t seed = 0;

  /// Table entry for `value`, or nullptr when it was not searched.
  static const ScoreEntry* find(std::span<const ScoreEntry> table, double value);
};

/// Sigma first at c = 1, then the multiplier at sigma_star.
CalibrationResult calibrate(const Sampler& sampler, const SampleSet& data, std::span<const std::size_t> idx,
                            std::span<const double> sigma_grid, std::span<const double> c_grid,
                            const CalibrationConfig& cfg = {});

/// Every pixel times c; c must be positive and finite.
ResponseGrid apply_postprocessing(const ResponseGrid& grid, double c);
void apply_postprocessing(std::span<float> pixels, double c);

}  // namespace zdc::calibration
