#include "zdc/pipeline/weights.hpp"

#include "zdc/errors.hpp"
#include "zdc/pipeline/binary_io.hpp"

namespace zdc::pipeline {

namespace {

constexpr std::pair<ModelKind, const char*> kKindNames[] = {{ModelKind::classifier, "classifier"},
                                                            {ModelKind::regressor, "regressor"},
                                                            {ModelKind::vae, "vae"},
                                                            {ModelKind::gan, "gan"},
                                                            {ModelKind::gan_aux, "gan_aux"}};

std::string blob_bytes(const ModelBundle& bundle, json* params) {
  std::string blob;
  for (const auto* set : bundle.parameter_sets()) {
    for (const auto& p : set->entries()) {
      const auto& t = p.var.value();
      if (params != nullptr) {
        params->push_back({{"name", p.name},
                           {"kind", std::string(models::to_string(p.kind))},
                           {"shape", t.shape()},
                           {"offset", blob.size()}});
      }
      append_f32(blob, t.values());
    }
  }
  return blob;
}

}  // namespace

std::string to_string(ModelKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kKindNames) {
    if (name == n) return k;
  }
  throw ValidationError("unknown model kind '" + name + "'");
}

ModelBundle ModelBundle::create(ModelKind kind, std::uint64_t seed) {
  ModelBundle b;
  b.kind = kind;
  b.train_config.seed = seed;
  switch (kind) {
    case ModelKind::classifier:
      b.classifier = std::make_unique<models::ClassifierNet>(seed);
      break;
    case ModelKind::regressor:
      b.regressor = std::make_unique<models::RegressorNet>(seed);
      break;
    case ModelKind::vae:
      b.encoder = std::make_unique<models::EncoderNet>(seed);
      b.decoder = std::make_unique<models::DecoderNet>(seed);
      break;
    case ModelKind::gan:
    case ModelKind::gan_aux:
      b.generator = std::make_unique<models::GeneratorNet>(seed);
      b.discriminator = std::make_unique<models::DiscriminatorNet>(seed);
      break;
  }
  return b;
}

bool ModelBundle::generative() const noexcept {
  return kind == ModelKind::vae || kind == ModelKind::gan || kind == ModelKind::gan_aux;
}

std::vector<models::ParameterSet*> ModelBundle::parameter_sets() {
  std::vector<models::ParameterSet*> out;
  if (classifier) out.push_back(&classifier->params());
  if (regressor) out.push_back(&regressor->params());
  if (encoder) out.push_back(&encoder->params());
  if (decoder) out.push_back(&decoder->params());
  if (generator) out.push_back(&generator->params());
  if (discriminator) out.push_back(&discriminator->params());
  return out;
}

std::vector<const models::ParameterSet*> ModelBundle::parameter_sets() const {
  auto sets = const_cast<ModelBundle*>(this)->parameter_sets();
  return {sets.begin(), sets.end()};
}

std::unique_ptr<calibration::ConditionalSampler> ModelBundle::sampler() const {
  if (decoder) return std::make_unique<calibration::DecoderSampler>(*decoder, stats);
  if (generator) return std::make_unique<calibration::GeneratorSampler>(*generator, stats);
  throw ContractError(to_string(kind) + " model cannot generate responses");
}

fs::path blob_path(const fs::path& manifest) {
  fs::path p = manifest;
  p += ".bin";
  return p;
}

void save_model(const fs::path& path, const ModelBundle& bundle) {
  json params = json::array();
  const std::string blob = blob_bytes(bundle, &params);
  json j = {{"format", "zdc-weights"},
            {"version", kWeightsFormatVersion},
            {"model", to_string(bundle.kind)},
            {"id", model_id(bundle)},
            {"seed", bundle.train_config.seed},
            {"code_version", ZDC_VERSION},
            {"dataset", bundle.dataset_id},
            {"blob", blob_path(path).filename().string()},
            {"blob_bytes", blob.size()},
            {"parameters", params},
            {"normalization", to_json(bundle.stats)},
            {"train_config", to_json(bundle.train_config)},
            {"training_log", bundle.training_log}};
  if (bundle.calibration) j["calibration"] = to_json(*bundle.calibration);
  write_text(blob_path(path), blob);
  write_text(path, dump(j));
}

ModelBundle load_model(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!j.is_object() || member(j, "format") != "zdc-weights") throw FormatError(path.string() + " is not a weights manifest");
  const int version = member(j, "version").get<int>();
  if (version != kWeightsFormatVersion) throw FormatError("unsupported weights version " + std::to_string(version));

  ModelBundle b = ModelBundle::create(model_kind_from_string(member(j, "model").get<std::string>()));
  b.stats = stats_from_json(member(j, "normalization"));
  b.train_config = train_config_from_json(member(j, "train_config"));
  b.training_log = member(j, "training_log");
  b.dataset_id = member(j, "dataset").get<std::string>();
  if (j.contains("calibration")) b.calibration = calibration_from_json(j["calibration"]);

  const fs::path blob_file = path.parent_path() / member(j, "blob").get<std::string>();
  const std::string blob = read_text(blob_file);
  const auto expected = member(j, "blob_bytes").get<std::size_t>();
  if (blob.size() != expected)
    throw FormatError(blob_file.string() + " has " + std::to_string(blob.size()) + " bytes, expected " +
                      std::to_string(expected));

  const json& params = member(j, "parameters");
  std::size_t k = 0, offset = 0;
  for (auto* set : b.parameter_sets()) {
    for (auto& p : set->entries()) {
      if (k >= params.size()) throw FormatError("weights manifest lists too few parameters");
      const json& e = params[k++];
      if (member(e, "name").get<std::string>() != p.name)
        throw FormatError("expected parameter " + p.name + ", found " + e["name"].dump());
      if (member(e, "shape").get<diff::Shape>() != p.var.value().shape())
        throw FormatError("shape mismatch for " + p.name);
      if (member(e, "offset").get<std::size_t>() != offset) throw FormatError("non-contiguous offset for " + p.name);
      auto& t = p.var.mutable_value();
      const auto values = decode_f32(blob, offset, t.size());
      std::copy(values.begin(), values.end(), t.values().begin());
      offset += 4 * t.size();
    }
  }
  if (k != params.size()) throw FormatError("weights manifest lists unexpected parameters");
  if (offset != blob.size()) throw FormatError("weights blob has trailing bytes");
  return b;
}

std::string model_id(const ModelBundle& bundle) {
  const std::string blob = blob_bytes(bundle, nullptr);
  return to_string(bundle.kind) + "-" + fnv1a_hex(blob);
}

}  // namespace zdc::pipeline
