#include "zdc/pipeline/json_io.hpp"

#include <cmath>

#include "zdc/errors.hpp"

namespace zdc::pipeline {

namespace {

json table_json(const std::vector<calibration::ScoreEntry>& table, const char* key) {
  json out = json::array();
  for (const auto& e : table) out.push_back({{key, e.value}, {"mean_w1", e.mean_w1}});
  return out;
}

std::vector<calibration::ScoreEntry> table_from_json(const json& j, const char* key) {
  std::vector<calibration::ScoreEntry> out;
  for (const auto& e : j) out.push_back({member(e, key).get<double>(), member(e, "mean_w1").get<double>()});
  return out;
}

json class_json(const metrics::ClassStats& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
}

}  // namespace

const json& member(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing JSON field '") + key + "'");
  return j.at(key);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json to_json(const NormalizationStats& stats) {
  return {{"mean", stats.mean}, {"stddev", stats.stddev}, {"pixel_scale", stats.pixel_scale}};
}

NormalizationStats stats_from_json(const json& j) {
  try {
    NormalizationStats s;
    s.mean = member(j, "mean").get<std::array<float, kNumAttributes>>();
    s.stddev = member(j, "stddev").get<std::array<float, kNumAttributes>>();
    s.pixel_scale = member(j, "pixel_scale").get<float>();
    if (!(s.pixel_scale > 0.0f) || !std::isfinite(s.pixel_scale)) throw FormatError("pixel scale must be positive");
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad normalization block: ") + e.what());
  }
}

json to_json(const OracleConfig& cfg) {
  return {{"seed", cfg.seed},
          {"n_samples", cfg.n_samples},
          {"photon_scale", cfg.photon_scale},
          {"deflection_gain", cfg.deflection_gain},
          {"vertex_gain", cfg.vertex_gain},
          {"base_sigma", cfg.base_sigma},
          {"sigma_log_gain", cfg.sigma_log_gain},
          {"neutral_prob", cfg.neutral_prob}};
}

OracleConfig oracle_config_from_json(const json& j) {
  OracleConfig c;
  c.seed = member(j, "seed").get<std::uint64_t>();
  c.n_samples = member(j, "n_samples").get<std::size_t>();
  c.photon_scale = member(j, "photon_scale").get<double>();
  c.deflection_gain = member(j, "deflection_gain").get<double>();
  c.vertex_gain = member(j, "vertex_gain").get<double>();
  c.base_sigma = member(j, "base_sigma").get<double>();
  c.sigma_log_gain = member(j, "sigma_log_gain").get<double>();
  c.neutral_prob = member(j, "neutral_prob").get<double>();
  return c;
}

json to_json(const calibration::CalibrationResult& r) {
  return {{"c_star", r.c_star},
          {"sigma_star", r.sigma_star},
          {"search_order", "sigma at c=1, then c at sigma_star"},
          {"sigma_table", table_json(r.sigma_table, "sigma")},
          {"c_table", table_json(r.c_table, "c")},
          {"n_eval_samples", r.n_eval_samples},
          {"seed", r.seed}};
}

calibration::CalibrationResult calibration_from_json(const json& j) {
  calibration::CalibrationResult r;
  r.c_star = member(j, "c_star").get<double>();
  r.sigma_star = member(j, "sigma_star").get<double>();
  r.sigma_table = table_from_json(member(j, "sigma_table"), "sigma");
  r.c_table = table_from_json(member(j, "c_table"), "c");
  r.n_eval_samples = member(j, "n_eval_samples").get<std::size_t>();
  r.seed = member(j, "seed").get<std::uint64_t>();
  if (!(r.c_star > 0.0) || !(r.sigma_star >= 0.0)) throw FormatError("calibration values out of range");
  return r;
}

json to_json(const training::TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},         {"batch_size", cfg.batch_size}, {"learning_rate", cfg.learning_rate},
          {"beta1", cfg.beta1},           {"lambda_aux", cfg.lambda_aux}, {"beta_kl", cfg.beta_kl},
          {"seed", cfg.seed}};
}

training::TrainConfig train_config_from_json(const json& j) {
  training::TrainConfig c;
  c.epochs = member(j, "epochs").get<int>();
  c.batch_size = member(j, "batch_size").get<std::size_t>();
  c.learning_rate = member(j, "learning_rate").get<float>();
  c.beta1 = member(j, "beta1").get<float>();
  c.lambda_aux = member(j, "lambda_aux").get<double>();
  c.beta_kl = member(j, "beta_kl").get<double>();
  c.seed = member(j, "seed").get<std::uint64_t>();
  return c;
}

json to_json(const training::TrainLog& log) {
  json epochs = json::array();
  for (const auto& e : log.epochs) {
    json losses = json::object();
    for (const auto& [name, value] : e.losses) losses[name] = value;
    epochs.push_back({{"epoch", e.epoch}, {"losses", losses}});
  }
  return {{"model", log.model}, {"seed", log.seed}, {"epochs", epochs}};
}

json timing_json(const training::TrainLog& log) {
  json epochs = json::array();
  for (const auto& e : log.epochs) epochs.push_back({{"epoch", e.epoch}, {"seconds", e.seconds}});
  return {{"model", log.model}, {"total_seconds", log.total_seconds()}, {"epochs", epochs}};
}

json to_json(const metrics::ChannelReport& r) {
  json ch = json::object();
  for (std::size_t k = 0; k < kNumChannels; ++k) ch[kChannelNames[k]] = r.distance[k];
  return {{"channels_w1", ch}, {"mean_w1", r.mean}, {"n_real", r.n_real}, {"n_generated", r.n_generated}};
}

json to_json(const metrics::ClassificationReport& r) {
  return {{"accuracy", r.accuracy},
          {"zero", class_json(r.zero)},
          {"nonzero", class_json(r.nonzero)},
          {"confusion",
           {{"true_positive", r.true_positive},
            {"false_positive", r.false_positive},
            {"true_negative", r.true_negative},
            {"false_negative", r.false_negative}}},
          {"positive_class", "nonzero"}};
}

}  // namespace zdc::pipeline
