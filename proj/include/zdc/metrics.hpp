#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "zdc/dataset.hpp"
#include "zdc/response_model.hpp"

namespace zdc::metrics {

/// Exact W1 between two empirical distributions, integrating the difference
/// of their piecewise-constant quantile functions. Breakpoints are merged on
/// the integer lattice i*nb, j*na so no quantile level is rounded.
double wasserstein1d(std::span<const double> a, std::span<const double> b);

struct ChannelReport {
  std::array<double, kNumChannels> distance{};
  double mean = 0.0;
  std::size_t n_real = 0;
  std::size_t n_generated = 0;
};

std::vector<ChannelVector> channels_of(const SampleSet& data);
std::vector<ChannelVector> channels_of(std::span<const float> flat_responses);

/// Per-channel W1 and their arithmetic mean.
ChannelReport channel_wasserstein(std::span<const ChannelVector> real, std::span<const ChannelVector> generated);
ChannelReport channel_wasserstein(const SampleSet& real, const SampleSet& generated);

struct ClassStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

/// Binary report where the positive class is "non-zero response". Metrics
/// with an empty denominator are reported as 0.
struct ClassificationReport {
  ClassStats zero;
  ClassStats nonzero;
  double accuracy = 0.0;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
};

inline constexpr double kDecisionThreshold = 0.5;

/// Labels are 1 for a non-zero response, 0 for a zero response.
ClassificationReport classification_report(std::span<const std::uint8_t> predicted,
                                           std::span<const std::uint8_t> truth);

/// Thresholds probabilities of a non-zero response: p >= threshold gives 1.
std::vector<std::uint8_t> threshold_labels(std::span<const float> probabilities,
                                           double threshold = kDecisionThreshold);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins over [lo, hi]; left-closed except the last, which also
/// takes x == hi. Samples outside the range are ignored.
std::vector<HistogramBin> histogram(std::span<const double> samples, int bins, double lo, double hi);

/// CSV with header "bin_lo,bin_hi,count".
std::string histogram_csv(std::span<const double> samples, int bins, double lo, double hi);

}  // namespace zdc::metrics
