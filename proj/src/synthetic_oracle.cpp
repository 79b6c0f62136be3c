#include "zdc/synthetic_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "zdc/errors.hpp"

namespace zdc {

namespace {
constexpr double kPzFloor = 1e-6;
constexpr double kCentre = 21.5;
constexpr double kEdge = kGridSize - 1;
}  // namespace

void OracleConfig::validate() const {
  const auto check = [](bool ok, const char* msg) {
    if (!ok) throw ValidationError(msg);
  };
  check(n_samples > 0, "oracle n_samples must be positive");
  for (double g : {photon_scale, deflection_gain, vertex_gain, base_sigma, sigma_log_gain}) {
    check(std::isfinite(g), "oracle gains must be finite");
  }
  check(neutral_prob > 0.0 && neutral_prob < 1.0, "oracle neutral_prob must lie in (0, 1)");
  check(photon_scale > 0.0, "oracle photon_scale must be positive");
}

ParticleRecord sample_particle(Rng& rng, const OracleConfig& cfg) {
  std::uniform_real_distribution<double> mass_dist(0.1, 1.0);
  std::uniform_real_distribution<double> log_energy_dist(std::log(10.0), std::log(500.0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> vertex_dist(0.0, 0.5);
  std::uniform_real_distribution<double> vz_dist(-2.0, 2.0);

  const double mass = mass_dist(rng);
  const double energy = std::clamp(std::exp(log_energy_dist(rng)), 10.0, 500.0);
  const double u = unit(rng);
  const double charged_half = 0.5 * (1.0 - cfg.neutral_prob);
  const double charge = u < charged_half ? -1.0 : (u < charged_half + cfg.neutral_prob ? 0.0 : 1.0);
  std::normal_distribution<double> transverse(0.0, 0.05 * energy);
  const double px = transverse(rng);
  const double py = transverse(rng);
  const double pz = std::sqrt(std::max(energy * energy - mass * mass - px * px - py * py, kPzFloor));
  const double vx = vertex_dist(rng);
  const double vy = vertex_dist(rng);
  const double vz = vz_dist(rng);

  return {static_cast<float>(mass), static_cast<float>(energy), static_cast<float>(charge),
          static_cast<float>(px),   static_cast<float>(py),     static_cast<float>(pz),
          static_cast<float>(vx),   static_cast<float>(vy),     static_cast<float>(vz)};
}

ImpactPoint impact_point(const ParticleRecord& p, const OracleConfig& cfg) {
  const double pz = p.pz;
  return {kCentre + cfg.deflection_gain * p.py / pz + cfg.vertex_gain * p.vy,
          kCentre + cfg.deflection_gain * p.px / pz + cfg.vertex_gain * p.vx};
}

bool oracle_is_zero(const ParticleRecord& p, const OracleConfig& cfg) {
  if (p.charge != 0.0f) return true;
  if (!(p.pz > 0.0f)) return true;
  const ImpactPoint hit = impact_point(p, cfg);
  const bool on_face = hit.row >= 0.0 && hit.row <= kEdge && hit.col >= 0.0 && hit.col <= kEdge;
  return !on_face;
}

double shower_sigma(double energy, const OracleConfig& cfg) {
  return cfg.base_sigma + cfg.sigma_log_gain * std::log10(energy);
}

ResponseGrid oracle_response(const ParticleRecord& p, Rng& rng, const OracleConfig& cfg) {
  if (oracle_is_zero(p, cfg)) throw ContractError("oracle_response called for a zero-response particle");

  std::normal_distribution<double> fluctuation(0.0, 0.1);
  double eta = fluctuation(rng);
  while (eta < -0.5) eta = fluctuation(rng);
  const double n_total = cfg.photon_scale * p.energy * (1.0 + eta);

  const ImpactPoint hit = impact_point(p, cfg);
  const double sigma = shower_sigma(p.energy, cfg);
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);

  std::array<double, kGridPixels> density{};
  double norm = 0.0;
  for (int r = 0; r < kGridSize; ++r) {
    const double dr = r - hit.row;
    for (int c = 0; c < kGridSize; ++c) {
      const double dc = c - hit.col;
      const double g = std::exp(-(dr * dr + dc * dc) * inv_two_var);
      density[static_cast<std::size_t>(r) * kGridSize + c] = g;
      norm += g;
    }
  }

  ResponseGrid grid;
  do {
    for (std::size_t i = 0; i < kGridPixels; ++i) {
      const double lambda = n_total * density[i] / norm;
      if (lambda <= 0.0) {
        grid.values[i] = 0.0f;
        continue;
      }
      std::poisson_distribution<long long> counts(lambda);
      grid.values[i] = static_cast<float>(counts(rng));
    }
  } while (grid.is_all_zero());
  return grid;
}

LabeledSample generate_sample(const OracleConfig& cfg, std::uint64_t index) {
  Rng rng = make_rng(cfg.seed, Stream::particle, index);
  LabeledSample sample;
  sample.particle = sample_particle(rng, cfg);
  sample.is_zero = oracle_is_zero(sample.particle, cfg);
  if (!sample.is_zero) {
    Rng response_rng = make_rng(cfg.seed, Stream::response, index);
    sample.response = oracle_response(sample.particle, response_rng, cfg);
  }
  return sample;
}

SampleSet generate_dataset(const OracleConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_samples;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = make_rng(cfg.seed, Stream::split);
  std::shuffle(order.begin(), order.end(), split_rng);
  std::vector<Split> split(n, Split::train);
  for (std::size_t k = train_count(n); k < n; ++k) split[order[k]] = Split::validation;

  SampleSet out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate_sample(cfg, i), split[i]);
  return out;
}

SampleSet generate_nonzero_samples(const OracleConfig& cfg, std::size_t count) {
  cfg.validate();
  SampleSet out;
  out.reserve(count);
  for (std::uint64_t i = 0; out.size() < count; ++i) {
    Rng rng = make_rng(cfg.seed, Stream::particle, i);
    const ParticleRecord p = sample_particle(rng, cfg);
    if (oracle_is_zero(p, cfg)) continue;
    out.push_back(generate_sample(cfg, i), out.size() < train_count(count) ? Split::train : Split::validation);
  }
  return out;
}

}  // namespace zdc
