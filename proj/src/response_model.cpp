#include "zdc/response_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "zdc/errors.hpp"

namespace zdc {

void validate(const ParticleRecord& particle) {
  for (float v : particle.to_row()) {
    if (!std::isfinite(v)) throw ValidationError("particle attribute is not finite");
  }
  if (!(particle.energy > 0.0f)) throw ValidationError("particle energy must be > 0");
  if (particle.mass < 0.0f) throw ValidationError("particle mass must be >= 0");
  if (particle.charge != -1.0f && particle.charge != 0.0f && particle.charge != 1.0f) {
    throw ValidationError("particle charge must be -1, 0 or +1");
  }
}

void validate(std::span<const float, kGridPixels> pixels) {
  for (std::size_t i = 0; i < kGridPixels; ++i) {
    const float v = pixels[i];
    if (!std::isfinite(v) || v < 0.0f) {
      throw ValidationError("response pixel " + std::to_string(i) + " is negative or non-finite");
    }
  }
}

double ResponseGrid::total() const noexcept {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

bool ResponseGrid::is_all_zero() const noexcept {
  return std::all_of(values.begin(), values.end(), [](float v) { return v == 0.0f; });
}

ResponseGrid ResponseGrid::from_span(std::span<const float> pixels) {
  if (pixels.size() != kGridPixels) {
    throw ContractError("response grid needs " + std::to_string(kGridPixels) + " pixels, got " +
                        std::to_string(pixels.size()));
  }
  ResponseGrid grid;
  std::copy(pixels.begin(), pixels.end(), grid.values.begin());
  return grid;
}

double ChannelVector::sum() const noexcept { return std::accumulate(ch.begin(), ch.end(), 0.0); }

std::size_t ChannelMasks::pixel_count(Channel channel) const noexcept {
  const auto& mask = masks[static_cast<std::size_t>(channel)];
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

Channel channel_of(int row, int col) noexcept {
  if ((row + col) % 2 == 0) return Channel::pmt_c;
  constexpr int half = kGridSize / 2;
  const int quadrant = (row >= half ? 2 : 0) + (col >= half ? 1 : 0);
  return static_cast<Channel>(1 + quadrant);
}

ChannelMasks channel_masks() {
  ChannelMasks result;
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      result.masks[static_cast<std::size_t>(channel_of(r, c))][static_cast<std::size_t>(r) * kGridSize + c] = true;
    }
  }
  return result;
}

namespace {

// Flat pixel -> channel lookup, built once.
const std::array<std::uint8_t, kGridPixels>& channel_lookup() {
  static const auto table = [] {
    std::array<std::uint8_t, kGridPixels> t{};
    for (int r = 0; r < kGridSize; ++r) {
      for (int c = 0; c < kGridSize; ++c) {
        t[static_cast<std::size_t>(r) * kGridSize + c] = static_cast<std::uint8_t>(channel_of(r, c));
      }
    }
    return t;
  }();
  return table;
}

}  // namespace

ChannelVector extract_channels(std::span<const float, kGridPixels> pixels) {
  validate(pixels);
  const auto& lookup = channel_lookup();
  ChannelVector out;
  for (std::size_t i = 0; i < kGridPixels; ++i) out.ch[lookup[i]] += pixels[i];
  return out;
}

PixelCoord argmax_coords(std::span<const float, kGridPixels> pixels) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < kGridPixels; ++i) {
    if (pixels[i] > pixels[best]) best = i;
  }
  return {static_cast<int>(best / kGridSize), static_cast<int>(best % kGridSize)};
}

}  // namespace zdc
