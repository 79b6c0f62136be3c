#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "zdc/pipeline/json_io.hpp"

namespace zdc::pipeline {

namespace fs = std::filesystem;

/// Desk-scale end-to-end run. Generative models and the regressor train on
/// the first `gen_samples` non-zero training responses; calibration uses the
/// first `calib_samples` of those; evaluation uses the first `eval_samples`
/// non-zero validation responses.
struct RecipeConfig {
  std::size_t n = 50000;
  std::size_t gen_samples = 1600;
  std::size_t calib_samples = 800;
  std::size_t eval_samples = 800;
  int epochs = 10;
  int classifier_epochs = 10;
  std::size_t batch_size = 64;
  double lambda_aux = 1.0;
  std::uint64_t seed = 42;
  std::vector<double> sigma_grid;  // empty: defaults
  std::vector<double> c_grid;

  void validate() const;
};

struct RecipeResult {
  json report;
  json timing;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Writes data/, models/, reports/, recipe_report.json, recipe_table.md and
/// recipe_report.json.timing.json under `out_dir`.
RecipeResult run_recipe(const fs::path& out_dir, const RecipeConfig& cfg, const ProgressFn& progress = {});

/// Reference values of the original study on its real dataset, by row name.
/// They are documentation only: the synthetic data here has another scale.
json reference_table();

/// Markdown rendering of the report rows.
std::string recipe_markdown(const json& report);

}  // namespace zdc::pipeline
