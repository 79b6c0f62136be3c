#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "zdc/diff/autograd.hpp"
#include "zdc/diff/ops.hpp"
#include "zdc/random.hpp"

namespace zdc::models {

using diff::Mode;
using diff::Shape;
using diff::Tensor;
using diff::Var;

inline constexpr std::int64_t kCondDim = 9;
inline constexpr std::int64_t kLatentDim = 10;
inline constexpr float kLeakySlope = 0.2f;
inline constexpr float kDropout = 0.2f;

enum class ParamKind : std::uint8_t { weight, bias, gamma, beta, running_mean, running_var };

std::string_view to_string(ParamKind kind) noexcept;

/// One named tensor of a network. Running batchnorm statistics are stored
/// alongside the trainable tensors so that a single list describes everything
/// a weights file has to carry.
struct Parameter {
  std::string name;
  ParamKind kind = ParamKind::weight;
  Var var;
  std::int64_t fan_in = 0;
  std::int64_t fan_out = 0;

  bool trainable() const noexcept { return kind != ParamKind::running_mean && kind != ParamKind::running_var; }
};

class ParameterSet {
 public:
  explicit ParameterSet(std::string net = {}) : net_(std::move(net)) {}
  // Layers hold handles into the set; copies would silently share storage.
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  /// Registers "<net>.<layer>.<kind>" and returns its handle.
  Var add(int layer, ParamKind kind, Shape shape, std::int64_t fan_in = 0, std::int64_t fan_out = 0);

  const std::string& net() const noexcept { return net_; }
  std::vector<Parameter>& entries() noexcept { return entries_; }
  const std::vector<Parameter>& entries() const noexcept { return entries_; }

  std::vector<Var> trainable() const;
  /// Number of trainable scalars.
  std::size_t count() const;
  const Parameter* find(std::string_view name) const;

  /// Glorot-uniform weights, zero biases, unit gamma and running variance.
  void initialize(std::uint64_t seed);
  /// Toggles gradient tracking for every trainable tensor.
  void set_trainable(bool on);

 private:
  std::string net_;
  std::vector<Parameter> entries_;
};

struct TraceEntry {
  std::string label;
  Shape shape;
};
using Trace = std::vector<TraceEntry>;

/// Forward-pass settings. Train mode needs `rng` for networks with dropout.
struct ForwardContext {
  Mode mode = Mode::infer;
  Rng* rng = nullptr;
  Trace* trace = nullptr;
};

class Dense {
 public:
  Dense() = default;
  Dense(ParameterSet& params, int layer, std::int64_t in, std::int64_t out);
  Var operator()(const Var& x) const { return diff::dense(x, weight_, bias_); }

 private:
  Var weight_, bias_;
};

class Conv {
 public:
  Conv() = default;
  Conv(ParameterSet& params, int layer, std::int64_t in_ch, std::int64_t out_ch, std::int64_t kernel,
       std::int64_t stride, diff::Padding padding);
  Var operator()(const Var& x) const { return diff::conv2d(x, kernel_, bias_, stride_, padding_); }
  /// Same convolution applied to the nearest-2x upsampled input.
  Var after_upsample(const Var& x) const;

 private:
  Var kernel_, bias_;
  std::int64_t stride_ = 1;
  diff::Padding padding_ = diff::Padding::same;
};

class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(ParameterSet& params, int layer, std::int64_t channels);
  Var operator()(const Var& x, Mode mode) const;

 private:
  Var gamma_, beta_;
  mutable Var running_mean_, running_var_;
};

/// dense(9->124) relu -> dense(124->64) relu -> dense(64->1) sigmoid. Output is
/// P(response is non-zero).
class ClassifierNet {
 public:
  static constexpr const char* kName = "classifier";
  explicit ClassifierNet(std::uint64_t seed = 0);

  Var forward(const Var& cond, const ForwardContext& ctx = {}) const;
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

 private:
  ParameterSet params_{kName};
  Dense d0_, d1_, d2_;
};

/// Three stride-2 "same" convolutions (44->22->11->6), flatten to 4608, join the
/// condition, dense(32), then separate mean and log-variance heads.
class EncoderNet {
 public:
  static constexpr const char* kName = "encoder";
  explicit EncoderNet(std::uint64_t seed = 0);

  struct Output {
    Var mu;
    Var logvar;
  };
  Output forward(const Var& image, const Var& cond, const ForwardContext& ctx = {}) const;
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

 private:
  ParameterSet params_{kName};
  Conv c0_, c1_, c2_;
  Dense d3_, mu_, logvar_;
};

/// dense(19->4608) reshaped to 128x6x6, three upsample/conv4x4-same/batchnorm
/// blocks (6->12->24->48) and a 5x5 valid head with ReLU (48->44).
class DecoderNet {
 public:
  static constexpr const char* kName = "decoder";
  explicit DecoderNet(std::uint64_t seed = 0);

  Var forward(const Var& latent, const Var& cond, const ForwardContext& ctx = {}) const;
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

 private:
  ParameterSet params_{kName};
  Dense d0_;
  Conv c1_;
  BatchNorm b2_;
  Conv c3_;
  BatchNorm b4_;
  Conv c5_;
  BatchNorm b6_;
  Conv head_;
};

/// dense(256) and dense(21632) with dropout, reshaped to 128x13x13, then two
/// upsample/conv3x3-valid/batchnorm blocks (13->26->24->48->46) and a 3x3
/// valid head with ReLU (46->44).
class GeneratorNet {
 public:
  static constexpr const char* kName = "generator";
  explicit GeneratorNet(std::uint64_t seed = 0);

  Var forward(const Var& noise, const Var& cond, const ForwardContext& ctx = {}) const;
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

 private:
  ParameterSet params_{kName};
  Dense d0_, d1_;
  Conv c2_;
  BatchNorm b3_;
  Conv c4_;
  BatchNorm b5_;
  Conv head_;
};

/// Two stride-2 "same" convolutions (44->22->11, 16 filters: 1936 features),
/// join the condition, dense(128), dense(64) with dropout, sigmoid output.
class DiscriminatorNet {
 public:
  static constexpr const char* kName = "discriminator";
  explicit DiscriminatorNet(std::uint64_t seed = 0);

  Var forward(const Var& image, const Var& cond, const ForwardContext& ctx = {}) const;
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

 private:
  ParameterSet params_{kName};
  Conv c0_, c1_;
  Dense d2_, d3_, d4_;
};

/// Discriminator body on the image alone with a 2-unit ReLU head predicting
/// the (row, col) of the brightest pixel.
class RegressorNet {
 public:
  static constexpr const char* kName = "regressor";
  explicit RegressorNet(std::uint64_t seed = 0);

  Var forward(const Var& image, const ForwardContext& ctx = {}) const;
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

 private:
  ParameterSet params_{kName};
  Conv c0_, c1_;
  Dense d2_, d3_, d4_;
};

}  // namespace zdc::models
