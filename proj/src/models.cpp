#include "zdc/models.hpp"

#include <cmath>

#include "zdc/errors.hpp"

namespace zdc::models {

using diff::Padding;

namespace {

void record(const ForwardContext& ctx, const char* label, const Var& v) {
  if (ctx.trace != nullptr) ctx.trace->push_back({label, v.shape()});
}

Var dropout_layer(const Var& x, const ForwardContext& ctx) {
  if (ctx.mode == Mode::infer) return x;
  require(ctx.rng != nullptr, "train-mode forward needs a dropout random stream");
  return diff::dropout(x, kDropout, Mode::train, *ctx.rng);
}

// FNV-1a; keys each parameter's init stream by its name.
std::uint64_t name_key(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : name) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void check_batch(const Var& a, const Var& b) {
  require(a.shape().at(0) == b.shape().at(0), "image and condition batch sizes differ");
}

void check_image(const Var& x) {
  require(x.shape().size() == 4 && x.shape()[1] == 1 && x.shape()[2] == 44 && x.shape()[3] == 44,
          "expected images of shape [B,1,44,44], got " + diff::to_string(x.shape()));
}

void check_vector(const Var& x, std::int64_t width, const char* what) {
  require(x.shape().size() == 2 && x.shape()[1] == width,
          std::string(what) + " must have shape [B," + std::to_string(width) + "], got " +
              diff::to_string(x.shape()));
}

}  // namespace

std::string_view to_string(ParamKind kind) noexcept {
  switch (kind) {
    case ParamKind::weight: return "weight";
    case ParamKind::bias: return "bias";
    case ParamKind::gamma: return "gamma";
    case ParamKind::beta: return "beta";
    case ParamKind::running_mean: return "running_mean";
    case ParamKind::running_var: return "running_var";
  }
  return "unknown";
}

Var ParameterSet::add(int layer, ParamKind kind, Shape shape, std::int64_t fan_in, std::int64_t fan_out) {
  Parameter p;
  p.name = net_ + "." + std::to_string(layer) + "." + std::string(to_string(kind));
  p.kind = kind;
  p.fan_in = fan_in;
  p.fan_out = fan_out;
  p.var = Var::leaf(Tensor(std::move(shape)), p.trainable());
  entries_.push_back(p);
  return p.var;
}

std::vector<Var> ParameterSet::trainable() const {
  std::vector<Var> out;
  for (const auto& p : entries_)
    if (p.trainable()) out.push_back(p.var);
  return out;
}

std::size_t ParameterSet::count() const {
  std::size_t n = 0;
  for (const auto& p : entries_)
    if (p.trainable()) n += p.var.value().size();
  return n;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const auto& p : entries_)
    if (p.name == name) return &p;
  return nullptr;
}

void ParameterSet::initialize(std::uint64_t seed) {
  for (auto& p : entries_) {
    Tensor& t = p.var.mutable_value();
    switch (p.kind) {
      case ParamKind::weight: {
        const double a = std::sqrt(6.0 / static_cast<double>(p.fan_in + p.fan_out));
        Rng rng = make_rng(seed, Stream::init, name_key(p.name));
        std::uniform_real_distribution<float> u(static_cast<float>(-a), static_cast<float>(a));
        for (float& v : t.values()) v = u(rng);
        break;
      }
      case ParamKind::gamma:
      case ParamKind::running_var: t.fill(1.0f); break;
      default: t.fill(0.0f); break;
    }
  }
}

void ParameterSet::set_trainable(bool on) {
  for (auto& p : entries_)
    if (p.trainable()) p.var.set_requires_grad(on);
}

Dense::Dense(ParameterSet& params, int layer, std::int64_t in, std::int64_t out)
    : weight_(params.add(layer, ParamKind::weight, {in, out}, in, out)),
      bias_(params.add(layer, ParamKind::bias, {out})) {}

Conv::Conv(ParameterSet& params, int layer, std::int64_t in_ch, std::int64_t out_ch, std::int64_t kernel,
           std::int64_t stride, Padding padding)
    : kernel_(params.add(layer, ParamKind::weight, {out_ch, in_ch, kernel, kernel}, in_ch * kernel * kernel,
                         out_ch * kernel * kernel)),
      bias_(params.add(layer, ParamKind::bias, {out_ch})),
      stride_(stride),
      padding_(padding) {}

Var Conv::after_upsample(const Var& x) const {
  require(stride_ == 1, "upsampling convolution must have stride 1");
  return diff::upsample_conv2d(x, kernel_, bias_, padding_);
}

BatchNorm::BatchNorm(ParameterSet& params, int layer, std::int64_t channels)
    : gamma_(params.add(layer, ParamKind::gamma, {channels})),
      beta_(params.add(layer, ParamKind::beta, {channels})),
      running_mean_(params.add(layer, ParamKind::running_mean, {channels})),
      running_var_(params.add(layer, ParamKind::running_var, {channels})) {}

Var BatchNorm::operator()(const Var& x, Mode mode) const {
  return diff::batchnorm(x, gamma_, beta_, running_mean_.mutable_value(), running_var_.mutable_value(), mode);
}

ClassifierNet::ClassifierNet(std::uint64_t seed)
    : d0_(params_, 0, kCondDim, 124), d1_(params_, 1, 124, 64), d2_(params_, 2, 64, 1) {
  params_.initialize(seed);
}

Var ClassifierNet::forward(const Var& cond, const ForwardContext& ctx) const {
  check_vector(cond, kCondDim, "condition");
  Var h = diff::relu(d0_(cond));
  record(ctx, "dense0", h);
  h = diff::relu(d1_(h));
  record(ctx, "dense1", h);
  h = diff::sigmoid(d2_(h));
  record(ctx, "output", h);
  return h;
}

EncoderNet::EncoderNet(std::uint64_t seed)
    : c0_(params_, 0, 1, 32, 4, 2, Padding::same),
      c1_(params_, 1, 32, 64, 4, 2, Padding::same),
      c2_(params_, 2, 64, 128, 4, 2, Padding::same),
      d3_(params_, 3, 128 * 6 * 6 + kCondDim, 32),
      mu_(params_, 4, 32, kLatentDim),
      logvar_(params_, 5, 32, kLatentDim) {
  params_.initialize(seed);
}

EncoderNet::Output EncoderNet::forward(const Var& image, const Var& cond, const ForwardContext& ctx) const {
  check_image(image);
  check_vector(cond, kCondDim, "condition");
  check_batch(image, cond);
  Var h = diff::leaky_relu(c0_(image), kLeakySlope);
  record(ctx, "conv0", h);
  h = diff::leaky_relu(c1_(h), kLeakySlope);
  record(ctx, "conv1", h);
  h = diff::leaky_relu(c2_(h), kLeakySlope);
  record(ctx, "conv2", h);
  h = diff::flatten(h);
  record(ctx, "flatten", h);
  h = diff::concat(h, cond);
  record(ctx, "concat", h);
  h = diff::leaky_relu(d3_(h), kLeakySlope);
  record(ctx, "dense3", h);
  Output out{mu_(h), logvar_(h)};
  record(ctx, "mu", out.mu);
  record(ctx, "logvar", out.logvar);
  return out;
}

DecoderNet::DecoderNet(std::uint64_t seed)
    : d0_(params_, 0, kLatentDim + kCondDim, 128 * 6 * 6),
      c1_(params_, 1, 128, 128, 4, 1, Padding::same),
      b2_(params_, 2, 128),
      c3_(params_, 3, 128, 64, 4, 1, Padding::same),
      b4_(params_, 4, 64),
      c5_(params_, 5, 64, 32, 4, 1, Padding::same),
      b6_(params_, 6, 32),
      head_(params_, 7, 32, 1, 5, 1, Padding::valid) {
  params_.initialize(seed);
}

Var DecoderNet::forward(const Var& latent, const Var& cond, const ForwardContext& ctx) const {
  check_vector(latent, kLatentDim, "latent");
  check_vector(cond, kCondDim, "condition");
  check_batch(latent, cond);
  const std::int64_t batch = latent.shape()[0];
  Var h = diff::concat(latent, cond);
  record(ctx, "concat", h);
  h = d0_(h);
  record(ctx, "dense0", h);
  h = diff::reshape(h, {batch, 128, 6, 6});
  record(ctx, "reshape", h);
  h = diff::leaky_relu(b2_(c1_.after_upsample(h), ctx.mode), kLeakySlope);
  record(ctx, "block1", h);
  h = diff::leaky_relu(b4_(c3_.after_upsample(h), ctx.mode), kLeakySlope);
  record(ctx, "block2", h);
  h = diff::leaky_relu(b6_(c5_.after_upsample(h), ctx.mode), kLeakySlope);
  record(ctx, "block3", h);
  h = diff::relu(head_(h));
  record(ctx, "output", h);
  return h;
}

GeneratorNet::GeneratorNet(std::uint64_t seed)
    : d0_(params_, 0, kLatentDim + kCondDim, 256),
      d1_(params_, 1, 256, 128 * 13 * 13),
      c2_(params_, 2, 128, 128, 3, 1, Padding::valid),
      b3_(params_, 3, 128),
      c4_(params_, 4, 128, 64, 3, 1, Padding::valid),
      b5_(params_, 5, 64),
      head_(params_, 6, 64, 1, 3, 1, Padding::valid) {
  params_.initialize(seed);
}

Var GeneratorNet::forward(const Var& noise, const Var& cond, const ForwardContext& ctx) const {
  check_vector(noise, kLatentDim, "noise");
  check_vector(cond, kCondDim, "condition");
  check_batch(noise, cond);
  const std::int64_t batch = noise.shape()[0];
  Var h = diff::concat(noise, cond);
  record(ctx, "concat", h);
  h = diff::leaky_relu(dropout_layer(d0_(h), ctx), kLeakySlope);
  record(ctx, "dense0", h);
  h = diff::leaky_relu(dropout_layer(d1_(h), ctx), kLeakySlope);
  record(ctx, "dense1", h);
  h = diff::reshape(h, {batch, 128, 13, 13});
  record(ctx, "reshape", h);
  h = diff::leaky_relu(b3_(c2_.after_upsample(h), ctx.mode), kLeakySlope);
  record(ctx, "block1", h);
  h = diff::leaky_relu(b5_(c4_.after_upsample(h), ctx.mode), kLeakySlope);
  record(ctx, "block2", h);
  h = diff::relu(head_(h));
  record(ctx, "output", h);
  return h;
}

DiscriminatorNet::DiscriminatorNet(std::uint64_t seed)
    : c0_(params_, 0, 1, 32, 4, 2, Padding::same),
      c1_(params_, 1, 32, 16, 4, 2, Padding::same),
      d2_(params_, 2, 16 * 11 * 11 + kCondDim, 128),
      d3_(params_, 3, 128, 64),
      d4_(params_, 4, 64, 1) {
  params_.initialize(seed);
}

Var DiscriminatorNet::forward(const Var& image, const Var& cond, const ForwardContext& ctx) const {
  check_image(image);
  check_vector(cond, kCondDim, "condition");
  check_batch(image, cond);
  Var h = diff::leaky_relu(c0_(image), kLeakySlope);
  record(ctx, "conv0", h);
  h = diff::leaky_relu(c1_(h), kLeakySlope);
  record(ctx, "conv1", h);
  h = diff::flatten(h);
  record(ctx, "flatten", h);
  h = diff::concat(h, cond);
  record(ctx, "concat", h);
  h = dropout_layer(diff::leaky_relu(d2_(h), kLeakySlope), ctx);
  record(ctx, "dense2", h);
  h = dropout_layer(diff::leaky_relu(d3_(h), kLeakySlope), ctx);
  record(ctx, "dense3", h);
  h = diff::sigmoid(d4_(h));
  record(ctx, "output", h);
  return h;
}

RegressorNet::RegressorNet(std::uint64_t seed)
    : c0_(params_, 0, 1, 32, 4, 2, Padding::same),
      c1_(params_, 1, 32, 16, 4, 2, Padding::same),
      d2_(params_, 2, 16 * 11 * 11, 128),
      d3_(params_, 3, 128, 64),
      d4_(params_, 4, 64, 2) {
  params_.initialize(seed);
}

Var RegressorNet::forward(const Var& image, const ForwardContext& ctx) const {
  check_image(image);
  Var h = diff::leaky_relu(c0_(image), kLeakySlope);
  record(ctx, "conv0", h);
  h = diff::leaky_relu(c1_(h), kLeakySlope);
  record(ctx, "conv1", h);
  h = diff::flatten(h);
  record(ctx, "flatten", h);
  h = dropout_layer(diff::leaky_relu(d2_(h), kLeakySlope), ctx);
  record(ctx, "dense2", h);
  h = dropout_layer(diff::leaky_relu(d3_(h), kLeakySlope), ctx);
  record(ctx, "dense3", h);
  h = diff::relu(d4_(h));
  record(ctx, "output", h);
  return h;
}

}  // namespace zdc::models
