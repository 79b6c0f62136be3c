#include "zdc/pipeline/dataset_io.hpp"

#include "zdc/errors.hpp"
#include "zdc/pipeline/binary_io.hpp"
#include "zdc/pipeline/json_io.hpp"

namespace zdc::pipeline {

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kParticles = "particles.f32";
constexpr const char* kResponses = "responses.f32";
constexpr const char* kLabels = "labels.u8";
constexpr const char* kSplit = "split.u8";

void expect_size(const fs::path& path, std::uintmax_t expected) {
  if (!fs::exists(path)) throw IoError("missing dataset file " + path.string());
  const auto actual = fs::file_size(path);
  if (actual != expected)
    throw FormatError(path.string() + " has " + std::to_string(actual) + " bytes, expected " +
                      std::to_string(expected));
}

std::vector<float> particle_table(std::span<const ParticleRecord> particles) {
  std::vector<float> flat;
  flat.reserve(particles.size() * kNumAttributes);
  for (const auto& p : particles) {
    const auto row = p.to_row();
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return flat;
}

}  // namespace

void write_particles(const fs::path& path, std::span<const ParticleRecord> particles) {
  write_f32(path, particle_table(particles));
}

std::vector<ParticleRecord> read_particles(const fs::path& path) {
  const auto flat = read_f32(path);
  if (flat.size() % kNumAttributes != 0)
    throw FormatError(path.string() + ": particle table is not a whole number of 9-float rows");
  std::vector<ParticleRecord> out;
  out.reserve(flat.size() / kNumAttributes);
  for (std::size_t r = 0; r < flat.size(); r += kNumAttributes) {
    out.push_back(ParticleRecord::from_row(std::span<const float, kNumAttributes>(flat.data() + r, kNumAttributes)));
    validate(out.back());
  }
  return out;
}

std::vector<float> read_responses(const fs::path& path, std::size_t expected_rows) {
  expect_size(path, static_cast<std::uintmax_t>(expected_rows) * kGridPixels * 4);
  return read_f32(path);
}

void write_dataset(const fs::path& dir, const SampleSet& data, const DatasetManifest& manifest) {
  require(manifest.n == data.size(), "manifest sample count does not match the data");
  fs::create_directories(dir);
  json j = {{"format", "zdc-dataset"},
            {"version", kDatasetFormatVersion},
            {"id", manifest.id},
            {"n", manifest.n},
            {"split_seed", manifest.split_seed},
            {"n_train", data.indices(Split::train).size()},
            {"zero_fraction", data.zero_fraction()},
            {"normalization", to_json(manifest.stats)},
            {"files",
             {{"particles", kParticles}, {"responses", kResponses}, {"labels", kLabels}, {"split", kSplit}}},
            {"labels", "1 = zero response"}};
  if (manifest.oracle) j["oracle"] = to_json(*manifest.oracle);
  write_f32(dir / kParticles, particle_table(data.particles()));
  write_f32(dir / kResponses, data.responses());
  write_u8(dir / kLabels, data.zero_labels());
  write_u8(dir / kSplit, data.split_labels());
  write_text(dir / kManifest, dump(j));
}

DatasetFiles read_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("dataset directory " + dir.string() + " does not exist");
  json j;
  try {
    j = json::parse(read_text(dir / kManifest));
  } catch (const json::exception& e) {
    throw FormatError(dir.string() + "/manifest.json: " + e.what());
  }
  if (member(j, "format") != "zdc-dataset") throw FormatError("not a dataset manifest");
  if (member(j, "version").get<int>() != kDatasetFormatVersion)
    throw FormatError("unsupported dataset version " + member(j, "version").dump());

  DatasetFiles out;
  auto& m = out.manifest;
  m.id = member(j, "id").get<std::string>();
  m.n = member(j, "n").get<std::size_t>();
  m.split_seed = member(j, "split_seed").get<std::uint64_t>();
  m.stats = stats_from_json(member(j, "normalization"));
  if (j.contains("oracle")) m.oracle = oracle_config_from_json(j["oracle"]);

  const std::size_t n = m.n;
  expect_size(dir / kParticles, static_cast<std::uintmax_t>(n) * kNumAttributes * 4);
  expect_size(dir / kResponses, static_cast<std::uintmax_t>(n) * kGridPixels * 4);
  expect_size(dir / kLabels, n);
  expect_size(dir / kSplit, n);
  const auto particles = read_particles(dir / kParticles);
  const auto responses = read_f32(dir / kResponses);
  const auto labels = read_u8(dir / kLabels);
  const auto split = read_u8(dir / kSplit);

  out.data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const float> px(responses.data() + i * kGridPixels, kGridPixels);
    if (split[i] > 1) throw FormatError("split label " + std::to_string(split[i]) + " at row " + std::to_string(i));
    validate(std::span<const float, kGridPixels>(px.data(), kGridPixels));
    out.data.push_back(particles[i], px, static_cast<Split>(split[i]));
    if (labels[i] > 1 || (labels[i] == 1) != out.data.is_zero(i))
      throw FormatError("zero label disagrees with the response at row " + std::to_string(i));
  }
  return out;
}

DatasetFiles make_oracle_dataset(const OracleConfig& cfg) {
  DatasetFiles out;
  out.data = generate_dataset(cfg);
  out.manifest.id = "oracle-seed" + std::to_string(cfg.seed) + "-n" + std::to_string(cfg.n_samples);
  out.manifest.n = out.data.size();
  out.manifest.split_seed = cfg.seed;
  out.manifest.stats = NormalizationStats::fit(out.data);
  out.manifest.oracle = cfg;
  return out;
}

}  // namespace zdc::pipeline
