#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "testutil.hpp"
#include "tsbench/errors.hpp"
#include "tsbench/pretrain.hpp"

using namespace tsbench;
using testutil::random_tensor;

namespace {

double brute_nt_xent(const Tensor& h0, const Tensor& h1, double tau) {
  return oracles::nt_xent(h0, h1, tau);
}
double brute_level(const Tensor& z0, const Tensor& z1) {
  return oracles::ts2vec_level(z0, z1);
}
double brute_ts2vec(const Tensor& z0, const Tensor& z1) {
  return oracles::ts2vec(z0, z1);
}
double brute_mixingup(const Tensor& hi, const Tensor& hj, const Tensor& hk,
                      const std::vector<double>& lambda, double tau) {
  return oracles::mixingup(hi, hj, hk, lambda, tau);
}

std::vector<Series> random_batch(Rng& rng, std::size_t n, std::int64_t c, std::int64_t l) {
  std::vector<Series> out;
  for (std::size_t i = 0; i < n; ++i) {
    Series s(c, l);
    for (auto& v : s.values) v = rng.normal();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("nt_xent closed-form cases") {
  SUBCASE("orthogonal pair batch, tau=1") {
    Tensor h0 = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    Tensor h1 = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    const double got = nt_xent(h0, h1, 1.0).item();
    // Denominator holds the two remaining orthogonal features:
    // loss = -log(e^1 / 2e^0) = log 2 - 1, for every anchor.
    CHECK(got == doctest::Approx(std::log(2.0) - 1.0).epsilon(1e-12));
    CHECK(got == doctest::Approx(brute_nt_xent(h0, h1, 1.0)).epsilon(1e-12));
  }
  SUBCASE("large tau limit is log(2N-2)") {
    Rng rng(1);
    Tensor h0 = random_tensor({2, 4}, rng, false);
    Tensor h1 = random_tensor({2, 4}, rng, false);
    CHECK(nt_xent(h0, h1, 1e9).item() == doctest::Approx(std::log(2.0)).epsilon(1e-6));
  }
  SUBCASE("positive rescaling of rows leaves the loss unchanged") {
    Rng rng(2);
    Tensor h0 = random_tensor({3, 5}, rng, false);
    Tensor h1 = random_tensor({3, 5}, rng, false);
    const double base = nt_xent(h0, h1, 0.3).item();
    Tensor h0s = mul_scalar(h0, 7.5);
    Tensor h1s = mul_scalar(h1, 0.02);
    CHECK(nt_xent(h0s, h1s, 0.3).item() == doctest::Approx(base).epsilon(1e-9));
  }
  SUBCASE("invalid inputs") {
    Rng rng(3);
    Tensor h = random_tensor({1, 4}, rng, false);
    CHECK_THROWS_AS(nt_xent(h, h, 1.0), UsageError);          // N < 2
    Tensor h2 = random_tensor({2, 4}, rng, false);
    CHECK_THROWS_AS(nt_xent(h2, h2, 0.0), UsageError);        // tau <= 0
    CHECK_THROWS_AS(nt_xent(h2, h2, -1.0), UsageError);
  }
}

TEST_CASE("nt_xent matches the brute-force oracle for N <= 8") {
  Rng rng(4);
  for (std::int64_t n = 2; n <= 8; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      Tensor h0 = random_tensor({n, 6}, rng, false);
      Tensor h1 = random_tensor({n, 6}, rng, false);
      const double tau = rng.uniform(0.05, 2.0);
      REQUIRE(nt_xent(h0, h1, tau).item() ==
              doctest::Approx(brute_nt_xent(h0, h1, tau)).epsilon(1e-9));
    }
  }
}

TEST_CASE("nt_xent is invariant under a common row permutation") {
  Rng rng(5);
  Tensor h0 = random_tensor({4, 6}, rng, false);
  Tensor h1 = random_tensor({4, 6}, rng, false);
  const double base = nt_xent(h0, h1, 0.2).item();
  const std::int64_t perm[4] = {2, 0, 3, 1};
  Tensor p0 = Tensor::zeros({4, 6}), p1 = Tensor::zeros({4, 6});
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j) {
      p0.at({i, j}) = h0.at({perm[i], j});
      p1.at({i, j}) = h1.at({perm[i], j});
    }
  CHECK(nt_xent(p0, p1, 0.2).item() == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("ts2vec_loss degenerate axes") {
  Rng rng(6);
  SUBCASE("T=1: only the instance term remains") {
    Tensor z0 = random_tensor({3, 1, 4}, rng, false);
    Tensor z1 = random_tensor({3, 1, 4}, rng, false);
    CHECK(ts2vec_loss(z0, z1).item() ==
          doctest::Approx(brute_level(z0, z1)).epsilon(1e-12));
  }
  SUBCASE("N=1: instance term is skipped, temporal term remains") {
    Tensor z0 = random_tensor({1, 4, 3}, rng, false);
    Tensor z1 = random_tensor({1, 4, 3}, rng, false);
    CHECK(ts2vec_loss(z0, z1).item() ==
          doctest::Approx(brute_ts2vec(z0, z1)).epsilon(1e-9));
  }
  SUBCASE("N=1, T=1: nothing to contrast") {
    Tensor z0 = random_tensor({1, 1, 3}, rng, false);
    CHECK(ts2vec_loss(z0, z0).item() == 0.0);
  }
}

TEST_CASE("ts2vec_loss matches the brute-force double loop") {
  Rng rng(7);
  SUBCASE("hand-checkable N=2, T=2") {
    Tensor z0 = Tensor::from_data({2, 2, 2}, {0.5, -0.2, 0.1, 0.9, -0.4, 0.3, 0.8, 0.0});
    Tensor z1 = Tensor::from_data({2, 2, 2}, {0.4, -0.1, 0.0, 1.0, -0.5, 0.2, 0.7, 0.1});
    CHECK(ts2vec_loss(z0, z1).item() ==
          doctest::Approx(brute_ts2vec(z0, z1)).epsilon(1e-9));
  }
  SUBCASE("random shapes") {
    for (int trial = 0; trial < 20; ++trial) {
      const std::int64_t n = 2 + trial % 4, t = 1 + trial % 5;
      Tensor z0 = random_tensor({n, t, 3}, rng, false);
      Tensor z1 = random_tensor({n, t, 3}, rng, false);
      REQUIRE(ts2vec_loss(z0, z1).item() ==
              doctest::Approx(brute_ts2vec(z0, z1)).epsilon(1e-9));
    }
  }
}

TEST_CASE("mixup batch construction") {
  Rng rng(8);
  auto batch = random_batch(rng, 5, 1, 12);
  SUBCASE("alpha must be positive") {
    CHECK_THROWS_AS(mixup_batch(batch, 0.0, rng), UsageError);
  }
  SUBCASE("mix identities") {
    Series a = batch[0], b = batch[1];
    CHECK(mix_series(a, b, 1.0).values == a.values);
    Series mid = mix_series(a, b, 0.5);
    for (std::size_t i = 0; i < mid.values.size(); ++i)
      CHECK(mid.values[i] == doctest::Approx(0.5 * a.values[i] + 0.5 * b.values[i]));
  }
  SUBCASE("x_k is exactly the lambda mix and pairs avoid self") {
    MixBatch mb = mixup_batch(batch, 0.2, rng);
    for (std::size_t i = 0; i < mb.xk.size(); ++i) {
      CHECK(mb.xi[i].values != mb.xj[i].values);
      Series expect = mix_series(mb.xi[i], mb.xj[i], mb.lambda[i]);
      CHECK(mb.xk[i].values == expect.values);
    }
  }
}

TEST_CASE("mixingup_loss matches the brute-force soft-target oracle") {
  Rng rng(9);
  SUBCASE("hand-set N=2") {
    Tensor hi = Tensor::from_data({2, 3}, {1, 0, 0, 0, 1, 0});
    Tensor hj = Tensor::from_data({2, 3}, {0, 0, 1, 1, 1, 0});
    Tensor hk = Tensor::from_data({2, 3}, {0.7, 0.1, 0.3, 0.4, 0.9, 0.1});
    std::vector<double> lam{0.3, 0.8};
    CHECK(mixingup_loss(hi, hj, hk, lam, 0.5).item() ==
          doctest::Approx(brute_mixingup(hi, hj, hk, lam, 0.5)).epsilon(1e-9));
  }
  SUBCASE("random batches N <= 8") {
    for (std::int64_t n = 2; n <= 8; ++n)
      for (int trial = 0; trial < 20; ++trial) {
        Tensor hi = random_tensor({n, 5}, rng, false);
        Tensor hj = random_tensor({n, 5}, rng, false);
        Tensor hk = random_tensor({n, 5}, rng, false);
        std::vector<double> lam;
        for (std::int64_t i = 0; i < n; ++i) lam.push_back(rng.uniform());
        const double tau = rng.uniform(0.05, 2.0);
        REQUIRE(mixingup_loss(hi, hj, hk, lam, tau).item() ==
                doctest::Approx(brute_mixingup(hi, hj, hk, lam, tau)).epsilon(1e-9));
      }
  }
}

TEST_CASE("loss gradients pass finite differences") {
  Rng rng(10);
  SUBCASE("nt_xent") {
    Tensor h0 = random_tensor({3, 4}, rng, true);
    Tensor h1 = random_tensor({3, 4}, rng, true);
    auto fwd = [&] { return nt_xent(h0, h1, 0.5); };
    CHECK(testutil::gradcheck(fwd, {h0, h1}) < 1e-4);
  }
  SUBCASE("ts2vec_loss") {
    Tensor z0 = random_tensor({2, 3, 3}, rng, true);
    Tensor z1 = random_tensor({2, 3, 3}, rng, true);
    auto fwd = [&] { return ts2vec_loss(z0, z1); };
    CHECK(testutil::gradcheck(fwd, {z0, z1}) < 1e-4);
  }
  SUBCASE("mixingup_loss") {
    Tensor hi = random_tensor({3, 4}, rng, true);
    Tensor hj = random_tensor({3, 4}, rng, true);
    Tensor hk = random_tensor({3, 4}, rng, true);
    std::vector<double> lam{0.2, 0.6, 0.9};
    auto fwd = [&] { return mixingup_loss(hi, hj, hk, lam, 0.4); };
    CHECK(testutil::gradcheck(fwd, {hi, hj, hk}) < 1e-4);
  }
}

TEST_CASE("timeclr_step") {
  Rng model_rng(11);
  ContrastiveModel model =
      make_contrastive_model(PtmKind::TimeCLR, BackboneKind::ResNet, 1, model_rng);
  ContrastConfig cfg;
  auto batch = random_batch(model_rng, 4, 1, 16);

  SUBCASE("finite losses across seeds 0..9") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      CHECK(std::isfinite(timeclr_step(batch, model, cfg, rng).item()));
    }
  }
  SUBCASE("identity-strength augmentations reduce to nt_xent of tied views") {
    ContrastConfig id_cfg;
    id_cfg.augment = AugmentParams::identity();
    // Negation has no strength knob, so pick a seed where neither view
    // draws it; every other kind is the identity at these settings.
    std::uint64_t seed = 0;
    for (;; ++seed) {
      Rng probe(seed);
      const AugmentKind k0 = sample_one_augmentation(probe);
      const AugmentKind k1 = sample_one_augmentation(probe);
      if (k0 != AugmentKind::Negation && k1 != AugmentKind::Negation) break;
    }
    Rng rng(seed);
    const double got = timeclr_step(batch, model, id_cfg, rng).item();
    Tensor h = model.projector.forward(model.backbone->forward(batch_to_tensor(batch)));
    const double expect = nt_xent(h, h, id_cfg.temperature).item();
    CHECK(got == doctest::Approx(expect).epsilon(1e-9));
  }
  SUBCASE("gradient reaches every model parameter") {
    Rng rng(0);
    ParamList params = model.params();
    params.zero_grad();
    Tensor loss = timeclr_step(batch, model, cfg, rng);
    loss.backward();
    for (auto& [name, t] : params.items) {
      double norm = 0;
      for (double g : t.grad()) norm += g * g;
      INFO("parameter ", name);
      CHECK(norm > 0.0);
    }
  }
}

TEST_CASE("one optimizer step decreases every objective on a fixed batch") {
  for (PtmKind ptm : {PtmKind::TimeCLR, PtmKind::Ts2Vec, PtmKind::MixingUp, PtmKind::TfC}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng model_rng(100 + seed);
      ContrastiveModel model =
          make_contrastive_model(ptm, BackboneKind::ResNet, 1, model_rng);
      ContrastConfig cfg;
      auto batch = random_batch(model_rng, 4, 1, 16);

      AdamWConfig ocfg;
      ocfg.lr = 1e-4;
      ocfg.weight_decay = 0.0;
      AdamW opt(model.params(), ocfg);

      Rng step_rng(seed);
      opt.zero_grad();
      Tensor loss = pretrain_step(batch, model, cfg, step_rng);
      const double before = loss.item();
      loss.backward();
      opt.step();

      Rng eval_rng(seed);  // identical augmentation draws
      const double after = pretrain_step(batch, model, cfg, eval_rng).item();
      INFO(ptm_kind_name(ptm), " seed ", seed, ": ", before, " -> ", after);
      CHECK(after < before);
    }
  }
}

TEST_CASE("tfc dual model keeps parameter parity with single-tower models") {
  Rng r1(20), r2(20);
  ContrastiveModel single =
      make_contrastive_model(PtmKind::TimeCLR, BackboneKind::ResNet, 1, r1);
  ContrastiveModel dual = make_contrastive_model(PtmKind::TfC, BackboneKind::ResNet, 1, r2);
  const double ns = static_cast<double>(single.params().total_size());
  const double nd = static_cast<double>(dual.params().total_size());
  INFO("single=", ns, " dual=", nd);
  CHECK(std::abs(nd - ns) / ns < 0.05);
  // Concatenated dual projections feed the classifier.
  CHECK(dual.projection_dim() == 2 * single.projection_dim());
}

TEST_CASE("tfc specifics") {
  Rng rng(12);
  SUBCASE("constant signal concentrates in the DC bin") {
    Series s(1, 16);
    for (auto& v : s.values) v = 3.0;
    Series mag = magnitude_spectrum(s);
    CHECK(mag.at(0, 0) == doctest::Approx(3.0 * 16));
    for (std::int64_t k = 1; k < mag.length; ++k)
      CHECK(std::abs(mag.at(0, k)) < 1e-9);
  }
  SUBCASE("loss is finite and reaches both towers") {
    ContrastiveModel model =
        make_contrastive_model(PtmKind::TfC, BackboneKind::ResNet, 1, rng);
    ContrastConfig cfg;
    auto batch = random_batch(rng, 4, 1, 18);
    Rng step_rng(1);
    ParamList params = model.params();
    params.zero_grad();
    Tensor loss = tfc_step(batch, model, cfg, step_rng);
    CHECK(std::isfinite(loss.item()));
    loss.backward();
    double freq_grad = 0;
    for (auto& [name, t] : params.items)
      if (name.rfind("freq_", 0) == 0)
        for (double g : t.grad()) freq_grad += g * g;
    CHECK(freq_grad > 0.0);
  }
}

TEST_CASE("ts2vec_step runs end to end on per-step representations") {
  Rng rng(13);
  ContrastiveModel model =
      make_contrastive_model(PtmKind::Ts2Vec, BackboneKind::ResNet, 1, rng);
  ContrastConfig cfg;
  auto batch = random_batch(rng, 3, 1, 32);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng step_rng(seed);
    CHECK(std::isfinite(ts2vec_step(batch, model, cfg, step_rng).item()));
  }
}
