#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace zdc {

inline constexpr int kGridSize = 44;
inline constexpr std::size_t kGridPixels = kGridSize * kGridSize;
inline constexpr std::size_t kNumAttributes = 9;
inline constexpr std::size_t kNumChannels = 5;

/// Channel order used in every file and report.
inline constexpr std::array<const char*, kNumChannels> kChannelNames = {"PMTc", "PMT1", "PMT2",
                                                                         "PMT3", "PMT4"};

/// The nine conditioning attributes of one input particle.
struct ParticleRecord {
  float mass = 0.0f;
  float energy = 0.0f;
  float charge = 0.0f;
  float px = 0.0f;
  float py = 0.0f;
  float pz = 0.0f;
  float vx = 0.0f;
  float vy = 0.0f;
  float vz = 0.0f;

  std::array<float, kNumAttributes> to_row() const noexcept {
    return {mass, energy, charge, px, py, pz, vx, vy, vz};
  }
  static ParticleRecord from_row(std::span<const float, kNumAttributes> row) noexcept {
    return {row[0], row[1], row[2], row[3], row[4], row[5], row[6], row[7], row[8]};
  }
  bool operator==(const ParticleRecord&) const = default;
};

/// Throws ValidationError unless energy > 0, mass >= 0, charge in {-1,0,1} and all finite.
void validate(const ParticleRecord& particle);

/// One 44x44 calorimeter response; photon counts per fibre, row-major.
struct ResponseGrid {
  std::array<float, kGridPixels> values{};

  float& at(int row, int col) noexcept { return values[static_cast<std::size_t>(row) * kGridSize + col]; }
  float at(int row, int col) const noexcept {
    return values[static_cast<std::size_t>(row) * kGridSize + col];
  }
  std::span<const float, kGridPixels> view() const noexcept { return values; }
  double total() const noexcept;
  bool is_all_zero() const noexcept;
  bool operator==(const ResponseGrid&) const = default;

  static ResponseGrid from_span(std::span<const float> pixels);
};

/// Throws ValidationError when any pixel is negative or non-finite.
void validate(std::span<const float, kGridPixels> pixels);

/// Per-tower photon sums ordered [PMTc, PMT1, PMT2, PMT3, PMT4].
struct ChannelVector {
  std::array<double, kNumChannels> ch{};

  double sum() const noexcept;
  bool operator==(const ChannelVector&) const = default;
};

enum class Channel : std::uint8_t { pmt_c = 0, pmt_1 = 1, pmt_2 = 2, pmt_3 = 3, pmt_4 = 4 };

struct ChannelMasks {
  std::array<std::array<bool, kGridPixels>, kNumChannels> masks{};

  bool contains(Channel channel, int row, int col) const noexcept {
    return masks[static_cast<std::size_t>(channel)][static_cast<std::size_t>(row) * kGridSize + col];
  }
  std::size_t pixel_count(Channel channel) const noexcept;
};

/// Channel owning pixel (row, col). PMTc takes every pixel with even row+col;
/// the odd pixels go to towers 1-4 by quadrant (TL, TR, BL, BR). This is the
/// only place the fibre-to-channel assignment is defined.
Channel channel_of(int row, int col) noexcept;

ChannelMasks channel_masks();

ChannelVector extract_channels(std::span<const float, kGridPixels> pixels);
inline ChannelVector extract_channels(const ResponseGrid& grid) { return extract_channels(grid.view()); }

struct PixelCoord {
  int row = 0;
  int col = 0;
  bool operator==(const PixelCoord&) const = default;
};

/// Location of the largest pixel; ties resolve to the first in row-major order.
PixelCoord argmax_coords(std::span<const float, kGridPixels> pixels) noexcept;
inline PixelCoord argmax_coords(const ResponseGrid& grid) noexcept { return argmax_coords(grid.view()); }

}  // namespace zdc
