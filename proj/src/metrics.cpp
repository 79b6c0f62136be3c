#include "zdc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "zdc/errors.hpp"

namespace zdc::metrics {

double wasserstein1d(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), "wasserstein1d needs two non-empty samples");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  for (double v : sa) require(std::isfinite(v), "wasserstein1d input is not finite");
  for (double v : sb) require(std::isfinite(v), "wasserstein1d input is not finite");
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  const std::uint64_t na = sa.size(), nb = sb.size();
  if (na == nb) {
    double acc = 0.0;
    for (std::size_t i = 0; i < na; ++i) acc += std::abs(sa[i] - sb[i]);
    return acc / static_cast<double>(na);
  }
  // Quantile level q is represented as the integer q * na * nb.
  std::uint64_t i = 0, j = 0, pos = 0;
  long double acc = 0.0L;
  while (i < na && j < nb) {
    const std::uint64_t next_a = (i + 1) * nb, next_b = (j + 1) * na;
    const std::uint64_t next = std::min(next_a, next_b);
    acc += static_cast<long double>(next - pos) * std::abs(static_cast<long double>(sa[i]) - sb[j]);
    pos = next;
    if (next_a == next) ++i;
    if (next_b == next) ++j;
  }
  return static_cast<double>(acc / (static_cast<long double>(na) * static_cast<long double>(nb)));
}

std::vector<ChannelVector> channels_of(std::span<const float> flat_responses) {
  require(flat_responses.size() % kGridPixels == 0, "response block is not a whole number of grids");
  const std::size_t n = flat_responses.size() / kGridPixels;
  std::vector<ChannelVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(extract_channels(std::span<const float, kGridPixels>(flat_responses.data() + i * kGridPixels,
                                                                       kGridPixels)));
  }
  return out;
}

std::vector<ChannelVector> channels_of(const SampleSet& data) { return channels_of(data.responses()); }

ChannelReport channel_wasserstein(std::span<const ChannelVector> real, std::span<const ChannelVector> generated) {
  require(!real.empty() && !generated.empty(), "channel_wasserstein needs non-empty sample sets");
  ChannelReport report;
  report.n_real = real.size();
  report.n_generated = generated.size();
  std::vector<double> a(real.size()), b(generated.size());
  double total = 0.0;
  for (std::size_t k = 0; k < kNumChannels; ++k) {
    for (std::size_t i = 0; i < real.size(); ++i) a[i] = real[i].ch[k];
    for (std::size_t i = 0; i < generated.size(); ++i) b[i] = generated[i].ch[k];
    report.distance[k] = wasserstein1d(a, b);
    total += report.distance[k];
  }
  report.mean = total / static_cast<double>(kNumChannels);
  return report;
}

ChannelReport channel_wasserstein(const SampleSet& real, const SampleSet& generated) {
  return channel_wasserstein(channels_of(real), channels_of(generated));
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

ClassStats stats(std::size_t hit, std::size_t predicted, std::size_t actual) {
  ClassStats s;
  s.precision = ratio(hit, predicted);
  s.recall = ratio(hit, actual);
  s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  s.support = actual;
  return s;
}

}  // namespace

ClassificationReport classification_report(std::span<const std::uint8_t> predicted,
                                           std::span<const std::uint8_t> truth) {
  require(predicted.size() == truth.size(), "prediction and truth lengths differ");
  require(!truth.empty(), "classification_report needs at least one sample");
  ClassificationReport r;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(predicted[i] <= 1 && truth[i] <= 1, "labels must be 0 or 1");
    if (truth[i] == 1) {
      (predicted[i] == 1 ? r.true_positive : r.false_negative)++;
    } else {
      (predicted[i] == 1 ? r.false_positive : r.true_negative)++;
    }
  }
  const std::size_t pos = r.true_positive + r.false_negative, neg = r.true_negative + r.false_positive;
  require(pos > 0 && neg > 0, "classification_report needs both classes in the truth labels");
  r.nonzero = stats(r.true_positive, r.true_positive + r.false_positive, pos);
  r.zero = stats(r.true_negative, r.true_negative + r.false_negative, neg);
  r.accuracy = ratio(r.true_positive + r.true_negative, truth.size());
  return r;
}

std::vector<std::uint8_t> threshold_labels(std::span<const float> probabilities, double threshold) {
  std::vector<std::uint8_t> out(probabilities.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = probabilities[i] >= threshold ? 1 : 0;
  return out;
}

std::vector<HistogramBin> histogram(std::span<const double> samples, int bins, double lo, double hi) {
  require(bins >= 1, "histogram needs at least one bin");
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "histogram range must satisfy lo < hi");
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  const double width = (hi - lo) / bins;
  for (int k = 0; k < bins; ++k) {
    out[static_cast<std::size_t>(k)].lo = lo + k * width;
    out[static_cast<std::size_t>(k)].hi = k + 1 == bins ? hi : lo + (k + 1) * width;
  }
  for (double x : samples) {
    if (!(x >= lo && x <= hi)) continue;
    auto k = static_cast<std::size_t>(std::floor((x - lo) / width));
    k = std::min(k, out.size() - 1);
    // floor of a rounded quotient can land one bin off the stored edges
    while (k > 0 && x < out[k].lo) --k;
    while (k + 1 < out.size() && x >= out[k].hi) ++k;
    ++out[k].count;
  }
  return out;
}

std::string histogram_csv(std::span<const double> samples, int bins, double lo, double hi) {
  std::ostringstream os;
  os.precision(17);
  os << "bin_lo,bin_hi,count\n";
  for (const auto& b : histogram(samples, bins, lo, hi)) os << b.lo << ',' << b.hi << ',' << b.count << '\n';
  return os.str();
}

}  // namespace zdc::metrics
