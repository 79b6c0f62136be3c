#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zdc/pipeline/dataset_io.hpp"
#include "zdc/pipeline/weights.hpp"

namespace zdc::pipeline {

struct SimulateOptions {
  double threshold = metrics::kDecisionThreshold;
  std::optional<double> multiplier;  // defaults to the bundle's calibration
  std::optional<double> sigma;
  std::uint64_t seed = 42;
};

struct SimulationOutput {
  std::vector<float> responses;      // n x 1936, in input order
  std::vector<float> probabilities;  // classifier P(non-zero) per particle
  std::size_t zero_count = 0;
};

/// P(non-zero response) for each particle.
std::vector<float> gate_probabilities(const ModelBundle& classifier, std::span<const ParticleRecord> particles);

/// Gated fast simulation: particles below the threshold get an all-zero grid,
/// the rest are generated with noise index = position in the input.
SimulationOutput simulate(std::span<const ParticleRecord> particles, const ModelBundle& classifier,
                          const ModelBundle& model, const SimulateOptions& opts = {});

struct EvaluateOptions {
  Split split = Split::validation;
  std::size_t max_samples = 0;  // 0 keeps every non-zero sample of the split
  bool postprocess = true;      // use the calibrated c and sigma, else 1 and 1
  int bins = 50;
  std::uint64_t seed = 42;
  fs::path hist_dir;  // empty: no histograms
  double threshold = metrics::kDecisionThreshold;
};

struct Evaluation {
  json report;
  double seconds = 0.0;
  std::size_t generated = 0;
};

/// Channel W1 between the real non-zero responses of the split and responses
/// generated for the same conditions. `generated`, when given, replaces the
/// model and must hold one response per dataset row. With a classifier, the
/// report also carries the zero/non-zero classification block for the split.
Evaluation evaluate(const DatasetFiles& ds, const ModelBundle* model, const ModelBundle* classifier,
                    const std::vector<float>* generated, const EvaluateOptions& opts);

/// Non-zero samples of `split`, truncated to `max_samples` when it is positive.
std::vector<std::size_t> evaluation_indices(const SampleSet& data, Split split, std::size_t max_samples);

struct BenchmarkResult {
  json report;   // deterministic part
  json timing;   // wall-clock and throughput
};

/// Simulates `n` oracle-distributed particles end to end.
BenchmarkResult benchmark(const ModelBundle& model, const ModelBundle& classifier, std::size_t n, std::uint64_t seed);

/// Writes `<path>.timing.json`.
void write_timing(const fs::path& path, const json& timing);

Split split_from_string(const std::string& s);

}  // namespace zdc::pipeline
