#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "zdc/dataset.hpp"
#include "zdc/diff/adam.hpp"
#include "zdc/metrics.hpp"
#include "zdc/models.hpp"

namespace zdc::training {

using diff::Shape;
using diff::Tensor;
using diff::Var;

/// Learning rate and beta1 of 0 select the per-network default: 1e-3 / 0.9 for
/// classifier, regressor and VAE; 2e-4 / 0.5 for the GAN pair.
struct TrainConfig {
  int epochs = 10;
  std::size_t batch_size = 64;
  float learning_rate = 0.0f;
  float beta1 = 0.0f;
  double lambda_aux = 1.0;
  double beta_kl = 1.0;
  std::uint64_t seed = 42;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  std::map<std::string, double> losses;
  double seconds = 0.0;
};

struct TrainLog {
  std::string model;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;

  double total_seconds() const noexcept;
  /// Loss component `name` at a 1-based epoch.
  double loss(int epoch, const std::string& name) const;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Network inputs for a sample subset: standardized conditions [n,9],
/// log-scaled images [n,1,44,44] and brightest-pixel coordinates [n,2].
struct Batchable {
  Tensor cond;
  Tensor image;
  Tensor coords;
  std::size_t size() const noexcept { return cond.empty() ? 0 : static_cast<std::size_t>(cond.dim(0)); }
};

Batchable prepare(const SampleSet& data, std::span<const std::size_t> idx, const NormalizationStats& stats,
                  bool with_images = true);

/// Gathers rows `rows` of a [n, ...] tensor into a new [rows.size(), ...] tensor.
Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows);

struct ClassifierResult {
  models::ClassifierNet net;
  TrainLog log;
  metrics::ClassificationReport validation;
};

/// BCE on P(non-zero | condition) over the training split; the report covers
/// the validation split at the 0.5 threshold.
ClassifierResult train_classifier(const SampleSet& data, const NormalizationStats& stats, const TrainConfig& cfg,
                                  const EpochCallback& on_epoch = {});

std::vector<float> classifier_probabilities(const models::ClassifierNet& net, const SampleSet& data,
                                            std::span<const std::size_t> idx, const NormalizationStats& stats);

struct RegressorResult {
  models::RegressorNet net;
  TrainLog log;
  double validation_mae = 0.0;  // mean absolute coordinate error in pixels
};

/// MSE between predicted and true brightest-pixel coordinates on non-zero
/// training responses. The returned network is frozen.
RegressorResult pretrain_regressor(const SampleSet& data, const NormalizationStats& stats, const TrainConfig& cfg,
                                   const EpochCallback& on_epoch = {});

double regressor_mae(const models::RegressorNet& net, const SampleSet& data, std::span<const std::size_t> idx,
                     const NormalizationStats& stats);

struct VaeResult {
  models::EncoderNet encoder;
  models::DecoderNet decoder;
  TrainLog log;
};

/// Reconstruction MSE on log-scaled images plus beta_kl times the KL term.
VaeResult train_vae(const SampleSet& data, const NormalizationStats& stats, const TrainConfig& cfg,
                    const EpochCallback& on_epoch = {});

struct GanResult {
  models::GeneratorNet generator;
  models::DiscriminatorNet discriminator;
  TrainLog log;
};

/// Alternating 1:1 discriminator and generator updates with the
/// non-saturating generator loss. With a regressor, the generator also
/// minimizes lambda_aux * MSE(R(G(z|c)), coords of the paired real sample);
/// the regressor stays frozen and bit-identical.
GanResult train_gan(const SampleSet& data, const NormalizationStats& stats, const TrainConfig& cfg,
                    const models::RegressorNet* regressor = nullptr, const EpochCallback& on_epoch = {});

}  // namespace zdc::training
