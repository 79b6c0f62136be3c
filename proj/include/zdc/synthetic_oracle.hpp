#pragma once

#include <cstdint>

#include "zdc/dataset.hpp"
#include "zdc/random.hpp"
#include "zdc/response_model.hpp"

namespace zdc {

/// Parametric stand-in for the full transport simulation: a Gaussian shower
/// with Poisson photon counts, reaching the calorimeter only for neutral
/// particles whose extrapolated impact point lies on the 44x44 face.
struct OracleConfig {
  std::uint64_t seed = 42;
  std::size_t n_samples = 1000;
  double photon_scale = 10.0;     // kappa: mean photons per unit energy
  double deflection_gain = 10.0;  // alpha: pixels per unit transverse slope
  double vertex_gain = 40.0;      // beta: pixels per unit vertex offset
  double base_sigma = 1.5;
  double sigma_log_gain = 0.5;
  double neutral_prob = 0.10;

  void validate() const;
  bool operator==(const OracleConfig&) const = default;
};

ParticleRecord sample_particle(Rng& rng, const OracleConfig& cfg = {});

struct ImpactPoint {
  double row = 0.0;
  double col = 0.0;
};

/// Extrapolated shower centre on the face, in pixel units (centre is 21.5).
ImpactPoint impact_point(const ParticleRecord& p, const OracleConfig& cfg = {});

/// True when the particle leaves no signal: charged, pz <= 0, or impact off the face.
bool oracle_is_zero(const ParticleRecord& p, const OracleConfig& cfg = {});

/// Shower width in pixels for a given energy.
double shower_sigma(double energy, const OracleConfig& cfg = {});

/// Stochastic photon-count response of a particle that hits the face.
/// Redraws in the (astronomically rare) event of an all-zero Poisson field so
/// that a non-zero particle always yields a non-zero grid.
ResponseGrid oracle_response(const ParticleRecord& p, Rng& rng, const OracleConfig& cfg = {});

/// Sample i draws from its own stream derived from (seed, i); the 80/20
/// train/validation split comes from a seeded shuffle.
SampleSet generate_dataset(const OracleConfig& cfg);

/// Labeled sample for stream index `index` of `seed`.
LabeledSample generate_sample(const OracleConfig& cfg, std::uint64_t index);

/// Draws `count` non-zero samples by rejection over consecutive stream indices.
/// The first 80% are tagged train, the rest validation (draws are i.i.d.).
SampleSet generate_nonzero_samples(const OracleConfig& cfg, std::size_t count);

/// Number of training samples for an n-sample dataset (80%).
constexpr std::size_t train_count(std::size_t n) noexcept { return (n * 4) / 5; }

}  // namespace zdc
