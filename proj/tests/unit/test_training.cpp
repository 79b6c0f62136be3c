#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "zdc/errors.hpp"
#include "zdc/synthetic_oracle.hpp"
#include "zdc/training.hpp"

using namespace zdc;
using namespace zdc::training;

namespace {

const SampleSet& mixed_set() {
  static const SampleSet data = [] {
    OracleConfig oc;
    oc.seed = 7;
    oc.n_samples = 1500;
    return generate_dataset(oc);
  }();
  return data;
}

const SampleSet& shower_set() {
  static const SampleSet data = [] {
    OracleConfig oc;
    oc.seed = 11;
    return generate_nonzero_samples(oc, 40);
  }();
  return data;
}

TrainConfig small_config(int epochs = 1) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 16;
  cfg.seed = 5;
  return cfg;
}

std::vector<float> snapshot(const models::ParameterSet& params) {
  std::vector<float> out;
  for (const auto& p : params.entries()) {
    const auto& v = p.var.value().values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

bool bit_identical(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.beta1 = 1.0f;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.lambda_aux = -1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.learning_rate = std::nanf("");
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("prepare builds normalized inputs and brightest-pixel targets") {
  const auto& data = shower_set();
  const auto stats = NormalizationStats::fit(data);
  const std::vector<std::size_t> idx{3, 0, 9};
  const auto b = prepare(data, idx, stats);
  REQUIRE(b.size() == 3);
  CHECK(b.image.shape() == Shape{3, 1, kGridSize, kGridSize});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto px = data.response(idx[r]);
    const auto am = argmax_coords(px);
    CHECK(b.coords[2 * r] == static_cast<float>(am.row));
    CHECK(b.coords[2 * r + 1] == static_cast<float>(am.col));
    for (std::size_t k = 0; k < kGridPixels; k += 97) {
      CHECK(b.image[r * kGridPixels + k] == doctest::Approx(std::log1p(px[k]) / stats.pixel_scale).epsilon(1e-5));
    }
    const auto c = stats.standardize(data.particle(idx[r]));
    for (std::size_t a = 0; a < kNumAttributes; ++a) CHECK(b.cond[r * kNumAttributes + a] == c[a]);
  }
}

TEST_CASE("gather_rows copies whole rows in order") {
  Tensor t({4, 3});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(i);
  const std::vector<std::size_t> rows{2, 0, 2};
  const auto g = gather_rows(t, rows);
  CHECK(g.shape() == Shape{3, 3});
  CHECK(g[0] == 6.0f);
  CHECK(g[3] == 0.0f);
  CHECK(g[8] == 8.0f);
}

TEST_CASE("classifier training is deterministic and learns") {
  const auto& data = mixed_set();
  const auto stats = NormalizationStats::fit(data);
  auto cfg = small_config(4);
  cfg.batch_size = 64;
  int calls = 0;
  const auto a = train_classifier(data, stats, cfg, [&](const EpochRecord& r) {
    ++calls;
    CHECK(r.epoch == calls);
  });
  const auto b = train_classifier(data, stats, cfg);
  CHECK(calls == 4);
  CHECK(a.log.model == "classifier");
  REQUIRE(a.log.epochs.size() == 4);
  for (int e = 1; e <= 4; ++e) CHECK(a.log.loss(e, "bce") == b.log.loss(e, "bce"));
  CHECK(bit_identical(snapshot(a.net.params()), snapshot(b.net.params())));
  CHECK(a.log.loss(4, "bce") < a.log.loss(1, "bce"));
  CHECK(a.validation.accuracy > 0.8);

  cfg.seed = 6;
  const auto c = train_classifier(data, stats, cfg);
  CHECK_FALSE(bit_identical(snapshot(a.net.params()), snapshot(c.net.params())));

  const auto val = data.indices(Split::validation);
  const auto p = classifier_probabilities(a.net, data, val, stats);
  REQUIRE(p.size() == val.size());
  for (float v : p) CHECK((v >= 0.0f && v <= 1.0f));
}

TEST_CASE("divergent training raises a numeric error with context") {
  const auto& data = mixed_set();
  const auto stats = NormalizationStats::fit(data);
  auto cfg = small_config(3);
  cfg.learning_rate = 1e30f;
  try {
    train_classifier(data, stats, cfg);
    FAIL("expected divergence");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("classifier training diverged") != std::string::npos);
  }
}

TEST_CASE("regressor pretraining freezes the network") {
  const auto& data = shower_set();
  const auto stats = NormalizationStats::fit(data);
  const auto r = pretrain_regressor(data, stats, small_config(2));
  CHECK(r.log.model == "regressor");
  CHECK(r.net.params().trainable().empty() == false);
  for (const auto& v : r.net.params().trainable()) CHECK_FALSE(v.requires_grad());
  CHECK(std::isfinite(r.validation_mae));
  CHECK(r.validation_mae >= 0.0);
}

TEST_CASE("vae log satisfies the objective identity") {
  const auto& data = shower_set();
  const auto stats = NormalizationStats::fit(data);
  auto cfg = small_config(1);
  cfg.beta_kl = 0.5;
  const auto v = train_vae(data, stats, cfg);
  CHECK(v.log.model == "vae");
  const double recon = v.log.loss(1, "reconstruction");
  const double kl = v.log.loss(1, "kl");
  CHECK(kl >= 0.0);
  CHECK(recon >= 0.0);
  CHECK(v.log.loss(1, "total") == doctest::Approx(recon + 0.5 * kl).epsilon(1e-5));
}

TEST_CASE("gan: auxiliary weight zero matches the plain objective and the regressor stays frozen") {
  const auto& data = shower_set();
  const auto stats = NormalizationStats::fit(data);
  const auto reg = pretrain_regressor(data, stats, small_config(1));
  const auto reg_before = snapshot(reg.net.params());

  auto cfg = small_config(1);
  const auto plain = train_gan(data, stats, cfg);
  CHECK(plain.log.model == "gan");
  CHECK(plain.log.epochs[0].losses.count("aux") == 0);

  cfg.lambda_aux = 0.0;
  const auto zero = train_gan(data, stats, cfg, &reg.net);
  CHECK(zero.log.model == "gan_aux");
  CHECK(zero.log.epochs[0].losses.count("aux") == 1);
  CHECK(bit_identical(snapshot(plain.generator.params()), snapshot(zero.generator.params())));
  CHECK(bit_identical(snapshot(plain.discriminator.params()), snapshot(zero.discriminator.params())));
  CHECK(zero.log.loss(1, "g_loss") == plain.log.loss(1, "g_loss"));

  cfg.lambda_aux = 1.0;
  const auto aux = train_gan(data, stats, cfg, &reg.net);
  CHECK_FALSE(bit_identical(snapshot(plain.generator.params()), snapshot(aux.generator.params())));
  CHECK(aux.log.loss(1, "g_loss") == doctest::Approx(aux.log.loss(1, "g_adv") + aux.log.loss(1, "aux")).epsilon(1e-5));
  CHECK(bit_identical(reg_before, snapshot(reg.net.params())));

  const auto again = train_gan(data, stats, cfg, &reg.net);
  CHECK(bit_identical(snapshot(aux.generator.params()), snapshot(again.generator.params())));
}

TEST_CASE("gan generator step uses the non-saturating loss") {
  const auto& data = shower_set();
  const auto stats = NormalizationStats::fit(data);
  const auto g = train_gan(data, stats, small_config(1));
  // -log D(G(z)) is positive and the discriminator loss sums two BCE terms.
  CHECK(g.log.loss(1, "g_adv") > 0.0);
  CHECK(g.log.loss(1, "d_loss") > 0.0);
  CHECK(g.log.loss(1, "g_loss") == g.log.loss(1, "g_adv"));
}

TEST_CASE("training requires usable data") {
  const auto& data = shower_set();
  const auto stats = NormalizationStats::fit(data);
  CHECK_THROWS_AS(train_classifier(data, stats, small_config()), ContractError);
}
