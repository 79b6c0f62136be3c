#include <cmath>
#include <random>

#include "doctest.h"
#include "support/gradcheck.hpp"
#include "zdc/errors.hpp"
#include "zdc/models.hpp"

using namespace zdc;
using namespace zdc::models;
using zdc::testing::random_tensor;

namespace {

Var input(Shape shape, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  return Var::constant(random_tensor(std::move(shape), rng, lo, hi));
}

Shape shape_of(const Trace& t, const std::string& label) {
  for (const auto& e : t)
    if (e.label == label) return e.shape;
  FAIL("missing trace entry " << label);
  return {};
}

void check_all_finite(const Var& v) { CHECK(v.value().all_finite()); }

}  // namespace

TEST_CASE("classifier shapes and parameter count") {
  ClassifierNet net(1);
  // 9*124+124 + 124*64+64 + 64*1+1
  CHECK(net.params().count() == 9305);
  Trace t;
  const Var y = net.forward(input({32, 9}, 1), {.trace = &t});
  CHECK(y.shape() == Shape{32, 1});
  CHECK(shape_of(t, "dense0") == Shape{32, 124});
  CHECK(shape_of(t, "dense1") == Shape{32, 64});
  for (float v : y.value().values()) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
  CHECK_THROWS_AS(net.forward(input({4, 8}, 1)), ContractError);
}

TEST_CASE("encoder trace 44 -> 22 -> 11 -> 6 and flatten width 4608") {
  EncoderNet net(2);
  Trace t;
  const auto out = net.forward(input({3, 1, 44, 44}, 2, 0.0f, 1.0f), input({3, 9}, 3), {.trace = &t});
  CHECK(shape_of(t, "conv0") == Shape{3, 32, 22, 22});
  CHECK(shape_of(t, "conv1") == Shape{3, 64, 11, 11});
  CHECK(shape_of(t, "conv2") == Shape{3, 128, 6, 6});
  CHECK(shape_of(t, "flatten") == Shape{3, 4608});
  CHECK(shape_of(t, "concat") == Shape{3, 4617});
  CHECK(shape_of(t, "dense3") == Shape{3, 32});
  CHECK(out.mu.shape() == Shape{3, 10});
  CHECK(out.logvar.shape() == Shape{3, 10});
  check_all_finite(out.mu);
  CHECK_THROWS_AS(net.forward(input({3, 1, 44, 44}, 2), input({2, 9}, 3)), ContractError);
  CHECK_THROWS_AS(net.forward(input({3, 1, 40, 40}, 2), input({3, 9}, 3)), ContractError);
}

TEST_CASE("decoder trace 6 -> 12 -> 24 -> 48 -> 44 with non-negative output") {
  DecoderNet net(3);
  Trace t;
  const Var y = net.forward(input({2, 10}, 4, -3.0f, 3.0f), input({2, 9}, 5), {.trace = &t});
  CHECK(shape_of(t, "concat") == Shape{2, 19});
  CHECK(shape_of(t, "dense0") == Shape{2, 4608});
  CHECK(shape_of(t, "reshape") == Shape{2, 128, 6, 6});
  CHECK(shape_of(t, "block1") == Shape{2, 128, 12, 12});
  CHECK(shape_of(t, "block2") == Shape{2, 64, 24, 24});
  CHECK(shape_of(t, "block3") == Shape{2, 32, 48, 48});
  CHECK(y.shape() == Shape{2, 1, 44, 44});
  for (float v : y.value().values()) CHECK(v >= 0.0f);

  const Var z = Var::constant(Tensor({2, 10}));
  const Var c = input({2, 9}, 6);
  const Var a = net.forward(z, c);
  const Var b = net.forward(z, c);
  CHECK(a.value().values()[0] == b.value().values()[0]);
  CHECK(std::equal(a.value().values().begin(), a.value().values().end(), b.value().values().begin()));
}

TEST_CASE("generator trace 13 -> 26 -> 24 -> 48 -> 46 -> 44") {
  GeneratorNet net(4);
  Trace t;
  Rng rng(1);
  const Var y = net.forward(input({2, 10}, 7), input({2, 9}, 8), {.mode = Mode::train, .rng = &rng, .trace = &t});
  CHECK(shape_of(t, "dense0") == Shape{2, 256});
  CHECK(shape_of(t, "dense1") == Shape{2, 21632});
  CHECK(shape_of(t, "reshape") == Shape{2, 128, 13, 13});
  CHECK(shape_of(t, "block1") == Shape{2, 128, 24, 24});
  CHECK(shape_of(t, "block2") == Shape{2, 64, 46, 46});
  CHECK(y.shape() == Shape{2, 1, 44, 44});
  for (float v : y.value().values()) CHECK(v >= 0.0f);

  // infer mode ignores dropout and is repeatable
  const Var n = input({2, 10}, 9), c = input({2, 9}, 10);
  const Var a = net.forward(n, c), b = net.forward(n, c);
  CHECK(std::equal(a.value().values().begin(), a.value().values().end(), b.value().values().begin()));
  CHECK_THROWS_AS(net.forward(n, c, {.mode = Mode::train}), ContractError);
}

TEST_CASE("discriminator trace and output range") {
  DiscriminatorNet net(5);
  Trace t;
  const Var y = net.forward(input({4, 1, 44, 44}, 11, 0.0f, 1.0f), input({4, 9}, 12), {.trace = &t});
  CHECK(shape_of(t, "conv0") == Shape{4, 32, 22, 22});
  CHECK(shape_of(t, "conv1") == Shape{4, 16, 11, 11});
  CHECK(shape_of(t, "flatten") == Shape{4, 1936});
  CHECK(shape_of(t, "concat") == Shape{4, 1945});
  CHECK(shape_of(t, "dense2") == Shape{4, 128});
  CHECK(shape_of(t, "dense3") == Shape{4, 64});
  CHECK(y.shape() == Shape{4, 1});
  for (float v : y.value().values()) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
}

TEST_CASE("regressor takes the image only and returns two non-negative coordinates") {
  RegressorNet net(6);
  Trace t;
  const Var y = net.forward(input({4, 1, 44, 44}, 13, 0.0f, 1.0f), {.trace = &t});
  CHECK(shape_of(t, "flatten") == Shape{4, 1936});
  CHECK(y.shape() == Shape{4, 2});
  check_all_finite(y);
  for (float v : y.value().values()) CHECK(v >= 0.0f);
}

TEST_CASE("parameter naming follows <net>.<layer>.<kind>") {
  GeneratorNet g;
  CHECK(g.params().find("generator.0.weight") != nullptr);
  CHECK(g.params().find("generator.1.weight")->var.shape() == Shape{256, 21632});
  CHECK(g.params().find("generator.3.running_var") != nullptr);
  CHECK(g.params().find("generator.6.weight")->var.shape() == Shape{1, 64, 3, 3});
  EncoderNet e;
  CHECK(e.params().find("encoder.3.weight")->var.shape() == Shape{4617, 32});
  CHECK(e.params().find("encoder.5.bias")->var.shape() == Shape{10});
  DecoderNet d;
  CHECK(d.params().find("decoder.7.weight")->var.shape() == Shape{1, 32, 5, 5});
  // names are unique and appear in layer order
  for (const auto* set : {&g.params(), &e.params(), &d.params()}) {
    int last = -1;
    for (std::size_t i = 0; i < set->entries().size(); ++i) {
      const auto& name = set->entries()[i].name;
      const int layer = std::stoi(name.substr(name.find('.') + 1));
      CHECK(layer >= last);
      last = layer;
      for (std::size_t j = i + 1; j < set->entries().size(); ++j) CHECK(set->entries()[j].name != name);
    }
  }
}

TEST_CASE("initialization: zero biases, bounded weights, seeded") {
  DiscriminatorNet a(7), b(7), c(8);
  for (std::size_t i = 0; i < a.params().entries().size(); ++i) {
    const auto& p = a.params().entries()[i];
    const auto& q = b.params().entries()[i];
    CHECK(std::equal(p.var.value().values().begin(), p.var.value().values().end(),
                     q.var.value().values().begin()));
    if (p.kind == ParamKind::bias) {
      for (float v : p.var.value().values()) CHECK(v == 0.0f);
    }
    if (p.kind == ParamKind::weight) {
      const float bound = static_cast<float>(std::sqrt(6.0 / static_cast<double>(p.fan_in + p.fan_out)));
      float top = 0.0f;
      for (float v : p.var.value().values()) top = std::max(top, std::abs(v));
      CHECK(top <= bound);
      CHECK(top > 0.5f * bound);
      const auto& r = c.params().entries()[i];
      CHECK(r.var.value()[0] != p.var.value()[0]);
    }
  }
  GeneratorNet g(1);
  for (const auto& p : g.params().entries()) {
    if (p.kind == ParamKind::gamma || p.kind == ParamKind::running_var)
      for (float v : p.var.value().values()) CHECK(v == 1.0f);
    if (p.kind == ParamKind::beta || p.kind == ParamKind::running_mean)
      for (float v : p.var.value().values()) CHECK(v == 0.0f);
  }
}

TEST_CASE("freezing removes gradient tracking") {
  RegressorNet r(1);
  r.params().set_trainable(false);
  for (const auto& v : r.params().trainable()) CHECK_FALSE(v.requires_grad());
  const Var y = r.forward(input({2, 1, 44, 44}, 3, 0.0f, 1.0f));
  CHECK_FALSE(y.requires_grad());
}
