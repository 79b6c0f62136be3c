#pragma once

#include <json.hpp>

#include "zdc/calibration.hpp"
#include "zdc/dataset.hpp"
#include "zdc/metrics.hpp"
#include "zdc/synthetic_oracle.hpp"
#include "zdc/training.hpp"

namespace zdc::pipeline {

using json = nlohmann::ordered_json;


json to_json(const NormalizationStats& stats);
NormalizationStats stats_from_json(const json& j);

json to_json(const OracleConfig& cfg);
OracleConfig oracle_config_from_json(const json& j);

json to_json(const calibration::CalibrationResult& r);
calibration::CalibrationResult calibration_from_json(const json& j);

json to_json(const training::TrainConfig& cfg);
training::TrainConfig train_config_from_json(const json& j);

/// Per-epoch losses only; wall-clock times are kept out so that outputs
/// depend on inputs alone.
json to_json(const training::TrainLog& log);
json timing_json(const training::TrainLog& log);

json to_json(const metrics::ChannelReport& r);
json to_json(const metrics::ClassificationReport& r);

/// Fetches a required member, raising FormatError when it is absent.
const json& member(const json& j, const char* key);

/// Pretty-printed JSON with a trailing newline.
std::string dump(const json& j);

}  // namespace zdc::pipeline
