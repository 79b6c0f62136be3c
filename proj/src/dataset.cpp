#include "zdc/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "zdc/errors.hpp"

namespace zdc {

void SampleSet::reserve(std::size_t n) {
  particles_.reserve(n);
  responses_.reserve(n * kGridPixels);
  zero_.reserve(n);
  split_.reserve(n);
}

void SampleSet::push_back(const ParticleRecord& particle, std::span<const float> response, Split split) {
  if (response.size() != kGridPixels) throw ContractError("response must have 1936 pixels");
  particles_.push_back(particle);
  responses_.insert(responses_.end(), response.begin(), response.end());
  const bool zero = std::all_of(response.begin(), response.end(), [](float v) { return v == 0.0f; });
  zero_.push_back(zero ? 1 : 0);
  split_.push_back(static_cast<std::uint8_t>(split));
}

void SampleSet::push_back(const LabeledSample& sample, Split split) {
  if (sample.is_zero != sample.response.is_all_zero()) {
    throw ValidationError("sample label disagrees with its response total");
  }
  push_back(sample.particle, sample.response.values, split);
}

LabeledSample SampleSet::sample(std::size_t i) const {
  return {particles_[i], ResponseGrid::from_span(response(i)), is_zero(i)};
}

std::vector<std::size_t> SampleSet::indices(Split s, bool nonzero_only) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (split(i) == s && (!nonzero_only || !is_zero(i))) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> SampleSet::nonzero_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!is_zero(i)) out.push_back(i);
  }
  return out;
}

SampleSet SampleSet::subset(std::span<const std::size_t> idx) const {
  SampleSet out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    out.particles_.push_back(particles_.at(i));
    const auto r = response(i);
    out.responses_.insert(out.responses_.end(), r.begin(), r.end());
    out.zero_.push_back(zero_[i]);
    out.split_.push_back(split_[i]);
  }
  return out;
}

double SampleSet::zero_fraction() const noexcept {
  if (empty()) return 0.0;
  return static_cast<double>(std::count(zero_.begin(), zero_.end(), 1)) / static_cast<double>(size());
}

NormalizationStats NormalizationStats::fit(const SampleSet& data) {
  const auto train = data.indices(Split::train);
  if (train.empty()) throw ContractError("normalization needs at least one training sample");

  NormalizationStats stats;
  std::array<double, kNumAttributes> sum{}, sq{};
  for (std::size_t i : train) {
    const auto row = data.particle(i).to_row();
    for (std::size_t a = 0; a < kNumAttributes; ++a) {
      sum[a] += row[a];
      sq[a] += static_cast<double>(row[a]) * row[a];
    }
  }
  const double n = static_cast<double>(train.size());
  for (std::size_t a = 0; a < kNumAttributes; ++a) {
    const double mean = sum[a] / n;
    const double var = std::max(sq[a] / n - mean * mean, 0.0);
    stats.mean[a] = static_cast<float>(mean);
    stats.stddev[a] = std::max(static_cast<float>(std::sqrt(var)), kStdFloor);
  }

  std::vector<float> logs;
  for (std::size_t i : train) {
    if (data.is_zero(i)) continue;
    for (float v : data.response(i)) logs.push_back(std::log1p(v));
  }
  if (!logs.empty()) {
    const auto k = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(logs.size()))) - 1;
    std::nth_element(logs.begin(), logs.begin() + static_cast<std::ptrdiff_t>(k), logs.end());
    stats.pixel_scale = logs[k];
  }
  if (!(stats.pixel_scale > 0.0f)) stats.pixel_scale = 1.0f;
  return stats;
}

std::array<float, kNumAttributes> NormalizationStats::standardize(const ParticleRecord& particle) const noexcept {
  auto row = particle.to_row();
  for (std::size_t a = 0; a < kNumAttributes; ++a) row[a] = (row[a] - mean[a]) / stddev[a];
  return row;
}

float NormalizationStats::normalize_pixel(float count) const noexcept {
  return std::log1p(count) / pixel_scale;
}

float NormalizationStats::denormalize_pixel(float value) const noexcept {
  return std::expm1(value * pixel_scale);
}

}  // namespace zdc
