#include <cmath>
#include <random>

#include "doctest.h"
#include "support/oracles.hpp"
#include "zdc/errors.hpp"
#include "zdc/metrics.hpp"
#include "zdc/synthetic_oracle.hpp"

using namespace zdc;
using namespace zdc::metrics;

namespace {

std::vector<double> draw(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> nd(0.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

}  // namespace

TEST_CASE("wasserstein1d small cases") {
  const std::vector<double> a{0, 1}, b{1, 2}, c{0, 0, 0, 1};
  CHECK(wasserstein1d(a, a) == 0.0);
  CHECK(wasserstein1d(a, b) == doctest::Approx(1.0));
  CHECK(wasserstein1d(c, a) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(testing::quantile_integral_w1(c, a) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(wasserstein1d(std::vector<double>{}, a), ContractError);
}

TEST_CASE("wasserstein1d agrees with the quantile-integral oracle") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> size(1, 60);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = draw(rng, size(rng));
    const auto b = draw(rng, trial % 3 == 0 ? a.size() : size(rng));
    CHECK(std::abs(wasserstein1d(a, b) - testing::quantile_integral_w1(a, b)) <= 1e-9);
  }
}

TEST_CASE("wasserstein1d metric properties") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = draw(rng, 20 + trial), b = draw(rng, 31), c = draw(rng, 7 + trial);
    CHECK(wasserstein1d(a, b) == doctest::Approx(wasserstein1d(b, a)).epsilon(1e-12));
    CHECK(wasserstein1d(a, c) <= wasserstein1d(a, b) + wasserstein1d(b, c) + 1e-12);
    auto shifted = a;
    for (auto& x : shifted) x += 2.5;
    CHECK(wasserstein1d(a, shifted) == doctest::Approx(2.5).epsilon(1e-12));
  }
}

TEST_CASE("channel_wasserstein identity and doubling") {
  OracleConfig cfg;
  const auto real = generate_nonzero_samples(cfg, 200);
  const auto same = channel_wasserstein(real, real);
  for (double d : same.distance) CHECK(d == 0.0);
  CHECK(same.mean == 0.0);

  SampleSet doubled;
  for (std::size_t i = 0; i < real.size(); ++i) {
    std::vector<float> px(real.response(i).begin(), real.response(i).end());
    for (auto& v : px) v *= 2.0f;
    doubled.push_back(real.particle(i), px);
  }
  const auto r = channel_wasserstein(real, doubled);
  const auto ch = channels_of(real);
  double mean_of = 0.0;
  for (std::size_t k = 0; k < kNumChannels; ++k) {
    double m = 0.0;
    std::vector<double> a, b;
    for (const auto& v : ch) {
      m += v.ch[k];
      a.push_back(v.ch[k]);
      b.push_back(2.0 * v.ch[k]);
    }
    m /= static_cast<double>(ch.size());
    CHECK(r.distance[k] == doctest::Approx(m).epsilon(1e-6));
    CHECK(r.distance[k] == doctest::Approx(testing::quantile_integral_w1(a, b)).epsilon(1e-6));
    mean_of += r.distance[k];
  }
  CHECK(r.mean == doctest::Approx(mean_of / 5.0));
  CHECK(r.n_real == 200);
}

TEST_CASE("classification_report") {
  const std::vector<std::uint8_t> truth{1, 0, 1, 0, 1, 0, 1, 0};
  const auto perfect = classification_report(truth, truth);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.zero.f1 == 1.0);
  CHECK(perfect.nonzero.precision == 1.0);

  const std::vector<std::uint8_t> ones(8, 1);
  const auto r = classification_report(ones, truth);
  CHECK(r.accuracy == 0.5);
  CHECK(r.nonzero.recall == 1.0);
  CHECK(r.nonzero.precision == 0.5);
  CHECK(r.zero.recall == 0.0);
  CHECK(r.zero.precision == 0.0);

  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.3);
  std::vector<std::uint8_t> p(500), t(500);
  for (std::size_t i = 0; i < 500; ++i) {
    p[i] = coin(rng);
    t[i] = coin(rng);
  }
  std::size_t counts[2][2] = {};
  for (std::size_t i = 0; i < 500; ++i) counts[t[i]][p[i]]++;
  const auto rr = classification_report(p, t);
  CHECK(rr.true_positive == counts[1][1]);
  CHECK(rr.false_positive == counts[0][1]);
  CHECK(rr.true_negative == counts[0][0]);
  CHECK(rr.false_negative == counts[1][0]);
  const double prec = static_cast<double>(counts[1][1]) / (counts[1][1] + counts[0][1]);
  const double rec = static_cast<double>(counts[1][1]) / (counts[1][1] + counts[1][0]);
  CHECK(rr.nonzero.precision == doctest::Approx(prec));
  CHECK(rr.nonzero.recall == doctest::Approx(rec));
  CHECK(rr.nonzero.f1 == doctest::Approx(2 * prec * rec / (prec + rec)));
  CHECK(rr.accuracy == doctest::Approx(static_cast<double>(counts[0][0] + counts[1][1]) / 500));

  CHECK_THROWS_AS(classification_report(std::vector<std::uint8_t>{1}, truth), ContractError);
  CHECK_THROWS_AS(classification_report(ones, ones), ContractError);
  CHECK(threshold_labels(std::vector<float>{0.49f, 0.5f, 0.9f}) == std::vector<std::uint8_t>{0, 1, 1});
}

TEST_CASE("histogram bins") {
  const std::vector<double> zeros(10, 0.0);
  const auto h = histogram(zeros, 2, 0.0, 1.0);
  CHECK(h[0].count == 10);
  CHECK(h[1].count == 0);

  const std::vector<double> edge{0.0, 0.5, 1.0, 1.5, -0.1};
  const auto e = histogram(edge, 2, 0.0, 1.0);
  CHECK(e[0].count == 1);
  CHECK(e[1].count == 2);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(100000);
  for (auto& x : s) x = u(rng);
  std::size_t total = 0;
  for (const auto& b : histogram(s, 10, 0.0, 1.0)) {
    CHECK(std::abs(static_cast<double>(b.count) - 1e4) <= 500.0);
    total += b.count;
  }
  CHECK(total == s.size());

  const auto csv = histogram_csv(zeros, 2, 0.0, 1.0);
  CHECK(csv.rfind("bin_lo,bin_hi,count\n0,0.5,10\n", 0) == 0);
  CHECK_THROWS_AS(histogram(zeros, 0, 0.0, 1.0), ContractError);
  CHECK_THROWS_AS(histogram(zeros, 3, 1.0, 1.0), ContractError);
}
