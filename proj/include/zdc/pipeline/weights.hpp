#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zdc/calibration.hpp"
#include "zdc/models.hpp"
#include "zdc/pipeline/json_io.hpp"

namespace zdc::pipeline {

namespace fs = std::filesystem;

inline constexpr int kWeightsFormatVersion = 1;

enum class ModelKind { classifier, regressor, vae, gan, gan_aux };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// A trained model with everything needed to run it: the networks of its
/// kind, the normalization it was trained with and, once calibrated, c and sigma.
struct ModelBundle {
  ModelKind kind = ModelKind::classifier;
  NormalizationStats stats;
  std::optional<calibration::CalibrationResult> calibration;
  training::TrainConfig train_config;
  json training_log = json::object();
  std::string dataset_id;

  std::unique_ptr<models::ClassifierNet> classifier;
  std::unique_ptr<models::RegressorNet> regressor;
  std::unique_ptr<models::EncoderNet> encoder;
  std::unique_ptr<models::DecoderNet> decoder;
  std::unique_ptr<models::GeneratorNet> generator;
  std::unique_ptr<models::DiscriminatorNet> discriminator;

  /// Fresh networks of `kind` initialized from `seed`.
  static ModelBundle create(ModelKind kind, std::uint64_t seed = 0);

  bool generative() const noexcept;
  std::vector<models::ParameterSet*> parameter_sets();
  std::vector<const models::ParameterSet*> parameter_sets() const;

  /// Sampler over the generating network; requires a generative kind.
  std::unique_ptr<calibration::ConditionalSampler> sampler() const;

  /// Calibrated values, or 1 and 1 when the bundle was never calibrated.
  double multiplier() const noexcept { return calibration ? calibration->c_star : 1.0; }
  double sigma() const noexcept { return calibration ? calibration->sigma_star : 1.0; }
};

/// Blob written next to the manifest: "<manifest>.bin".
fs::path blob_path(const fs::path& manifest);

/// Writes the JSON manifest to `path` and the parameters as little-endian
/// floats to blob_path(path), in manifest order.
void save_model(const fs::path& path, const ModelBundle& bundle);
ModelBundle load_model(const fs::path& path);

/// Digest of the serialized parameters, used as the model id in reports.
std::string model_id(const ModelBundle& bundle);

}  // namespace zdc::pipeline
