#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "zdc/response_model.hpp"

namespace zdc {

enum class Split : std::uint8_t { train = 0, validation = 1 };

struct LabeledSample {
  ParticleRecord particle;
  ResponseGrid response;
  bool is_zero = true;
};

/// Columnar sample storage matching the on-disk layout: particles, a flat
/// n x 1936 response block, zero-response labels and the train/validation split.
class SampleSet {
 public:
  SampleSet() = default;

  std::size_t size() const noexcept { return particles_.size(); }
  bool empty() const noexcept { return particles_.empty(); }

  void reserve(std::size_t n);
  void push_back(const ParticleRecord& particle, std::span<const float> response, Split split = Split::train);
  void push_back(const LabeledSample& sample, Split split = Split::train);

  const ParticleRecord& particle(std::size_t i) const { return particles_[i]; }
  std::span<const float, kGridPixels> response(std::size_t i) const {
    return std::span<const float, kGridPixels>(responses_.data() + i * kGridPixels, kGridPixels);
  }
  bool is_zero(std::size_t i) const { return zero_[i] != 0; }
  Split split(std::size_t i) const { return static_cast<Split>(split_[i]); }
  void set_split(std::size_t i, Split s) { split_[i] = static_cast<std::uint8_t>(s); }

  LabeledSample sample(std::size_t i) const;

  const std::vector<ParticleRecord>& particles() const noexcept { return particles_; }
  const std::vector<float>& responses() const noexcept { return responses_; }
  const std::vector<std::uint8_t>& zero_labels() const noexcept { return zero_; }
  const std::vector<std::uint8_t>& split_labels() const noexcept { return split_; }

  /// Indices of samples in `split`, optionally restricted to non-zero responses.
  std::vector<std::size_t> indices(Split split, bool nonzero_only = false) const;
  std::vector<std::size_t> nonzero_indices() const;

  /// New set holding the given samples (in the given order), keeping their split tags.
  SampleSet subset(std::span<const std::size_t> idx) const;

  double zero_fraction() const noexcept;

 private:
  std::vector<ParticleRecord> particles_;
  std::vector<float> responses_;
  std::vector<std::uint8_t> zero_;
  std::vector<std::uint8_t> split_;
};

/// Per-attribute z-score statistics for the conditioning vector and the pixel
/// scale s used by the log(1+x)/s image normalization.
struct NormalizationStats {
  std::array<float, kNumAttributes> mean{};
  std::array<float, kNumAttributes> stddev{1, 1, 1, 1, 1, 1, 1, 1, 1};
  float pixel_scale = 1.0f;

  static constexpr float kStdFloor = 1e-6f;

  /// Attribute stats over the training split; pixel scale is the 99th
  /// percentile of log(1+x) over pixels of the non-zero training responses.
  static NormalizationStats fit(const SampleSet& data);

  std::array<float, kNumAttributes> standardize(const ParticleRecord& particle) const noexcept;
  float normalize_pixel(float count) const noexcept;
  float denormalize_pixel(float value) const noexcept;

  bool operator==(const NormalizationStats&) const = default;
};

}  // namespace zdc
