#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "zdc/dataset.hpp"
#include "zdc/synthetic_oracle.hpp"

namespace zdc::pipeline {

namespace fs = std::filesystem;

inline constexpr int kDatasetFormatVersion = 1;

struct DatasetManifest {
  std::string id;
  std::size_t n = 0;
  std::uint64_t split_seed = 0;
  NormalizationStats stats;
  std::optional<OracleConfig> oracle;  // absent for ingested external data
};

struct DatasetFiles {
  DatasetManifest manifest;
  SampleSet data;
};

/// Writes manifest.json, particles.f32, responses.f32, labels.u8 (1 = zero
/// response) and split.u8 (0 = train, 1 = validation). Normalization stats are
/// fitted on the training split.
void write_dataset(const fs::path& dir, const SampleSet& data, const DatasetManifest& manifest);

/// Loads and cross-checks a dataset directory: exact file sizes, labels in
/// agreement with response totals, valid particles and grids.
DatasetFiles read_dataset(const fs::path& dir);

/// Generates the oracle dataset described by `cfg` as a ready-to-write bundle.
DatasetFiles make_oracle_dataset(const OracleConfig& cfg);

/// Bare n x 9 particle table.
void write_particles(const fs::path& path, std::span<const ParticleRecord> particles);
std::vector<ParticleRecord> read_particles(const fs::path& path);

/// Bare n x 1936 response table.
std::vector<float> read_responses(const fs::path& path, std::size_t expected_rows);

}  // namespace zdc::pipeline
