#pragma once

// Central finite-difference gradient checker. The probe loss is sum(w * f(x))
// with a fixed random w, accumulated in double; the analytic side runs the
// tape with the same weights.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "zdc/diff/autograd.hpp"
#include "zdc/diff/ops.hpp"

namespace zdc::testing {

using diff::Tensor;
using diff::Var;

using Builder = std::function<Var(const std::vector<Var>&)>;

inline Tensor random_tensor(diff::Shape shape, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<float> dist(lo, hi);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

/// Keeps every entry at least `gap` away from zero (for kinked activations).
inline Tensor away_from_zero(Tensor t, float gap) {
  for (auto& v : t.values()) {
    if (std::abs(v) < gap) v = v < 0 ? v - gap : v + gap;
  }
  return t;
}

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::vector<double> per_input;
};

inline double probe(const Builder& build, const std::vector<Tensor>& inputs, const Tensor& weights) {
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(Var::constant(t));
  const Var out = build(vars);
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += static_cast<double>(out.value()[i]) * weights[i];
  return acc;
}

/// Norm-wise relative error ||analytic - numeric|| / max(||analytic||, ||numeric||)
/// for every input; `check` marks inputs that take part in the comparison.
inline GradCheckReport check_gradients(const Builder& build, const std::vector<Tensor>& inputs,
                                       std::uint64_t seed, double step = 1e-3,
                                       std::vector<bool> check = {}) {
  if (check.empty()) check.assign(inputs.size(), true);
  std::mt19937_64 rng(seed ^ 0x5eedULL);

  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(Var::leaf(t, true));
  const Var out = build(vars);
  const Tensor weights = random_tensor(out.shape(), rng);
  diff::backward(diff::weighted_sum(out, weights));

  GradCheckReport report;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!check[k]) {
      report.per_input.push_back(0.0);
      continue;
    }
    std::vector<Tensor> work = inputs;
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const float original = work[k][i];
      work[k][i] = static_cast<float>(original + step);
      const double plus = probe(build, work, weights);
      work[k][i] = static_cast<float>(original - step);
      const double minus = probe(build, work, weights);
      work[k][i] = original;
      // Use the actually representable step for the denominator.
      const double h2 = static_cast<double>(static_cast<float>(original + step)) -
                        static_cast<double>(static_cast<float>(original - step));
      const double numeric = (plus - minus) / h2;
      const double analytic = vars[k].has_grad() ? vars[k].grad()[i] : 0.0;
      diff_sq += (analytic - numeric) * (analytic - numeric);
      a_sq += analytic * analytic;
      n_sq += numeric * numeric;
    }
    const double denom = std::max({std::sqrt(a_sq), std::sqrt(n_sq), 1e-12});
    const double rel = std::sqrt(diff_sq) / denom;
    report.per_input.push_back(rel);
    report.max_relative_error = std::max(report.max_relative_error, rel);
  }
  return report;
}

}  // namespace zdc::testing
