#include <doctest.h>

#include <cmath>
#include <limits>

#include "tsbench/errors.hpp"
#include "tsbench/optim.hpp"

using namespace tsbench;

namespace {

AdamW make_single(double value, AdamWConfig cfg) {
  ParamList params;
  params.add("p", Tensor::from_data({1}, {value}, true));
  return AdamW(std::move(params), cfg);
}

}  // namespace

TEST_CASE("adamw with zero gradient and zero decay is a no-op") {
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  auto opt = make_single(1.5, cfg);
  opt.params().items[0].second.grad()[0] = 0.0;
  opt.step();
  CHECK(opt.params().items[0].second.data()[0] == 1.5);
}

TEST_CASE("adamw degenerate betas reproduce the sign update") {
  AdamWConfig cfg;
  cfg.lr = 0.1;
  cfg.beta1 = 0.0;
  cfg.beta2 = 0.0;
  cfg.weight_decay = 0.0;
  cfg.eps = 1e-8;
  auto opt = make_single(1.0, cfg);
  opt.params().items[0].second.grad()[0] = 1.0;
  opt.step();
  // m_hat = g, v_hat = g^2 -> update = lr * g / (|g| + eps)
  CHECK(opt.params().items[0].second.data()[0] == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("weight decay is decoupled") {
  AdamWConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.1;
  auto opt = make_single(1.0, cfg);
  opt.params().items[0].second.grad()[0] = 0.0;
  opt.step();
  // p' = p - lr*wd*p; the zero gradient contributes nothing.
  CHECK(opt.params().items[0].second.data()[0] == doctest::Approx(0.99));
}

TEST_CASE("non-finite gradients reject the whole step") {
  AdamWConfig cfg;
  ParamList params;
  params.add("a", Tensor::from_data({1}, {1.0}, true));
  params.add("b", Tensor::from_data({1}, {2.0}, true));
  AdamW opt(std::move(params), cfg);
  opt.params().items[0].second.grad()[0] = 1.0;
  opt.params().items[1].second.grad()[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(opt.step(), UsageError);
  CHECK(opt.params().items[0].second.data()[0] == 1.0);
  CHECK(opt.step_count() == 0);
}

TEST_CASE("onecycle endpoints and peak") {
  OneCycleConfig cfg;
  cfg.max_lr = 0.4;
  cfg.total_steps = 100;
  cfg.warmup_frac = 0.3;
  cfg.div_factor = 25;
  cfg.final_div_factor = 1e4;

  CHECK(onecycle_lr(0, cfg) == doctest::Approx(0.4 / 25));
  CHECK(onecycle_lr(30, cfg) == doctest::Approx(0.4));
  const double final_lr = onecycle_lr(99, cfg);
  CHECK(std::abs(final_lr - 0.4 / 1e4) <= 0.01 * (0.4 / 1e4));

  int peak_count = 0;
  for (std::int64_t s = 0; s < 100; ++s) {
    const double lr = onecycle_lr(s, cfg);
    REQUIRE(lr > 0.0);
    REQUIRE(lr <= 0.4 + 1e-15);
    if (lr == 0.4) ++peak_count;
  }
  CHECK(peak_count == 1);
  CHECK_THROWS_AS(onecycle_lr(100, cfg), UsageError);
  CHECK_THROWS_AS(onecycle_lr(-1, cfg), UsageError);
}

TEST_CASE("onecycle tiny schedules stay positive with a single peak") {
  for (std::int64_t total : {1, 2, 3, 5}) {
    OneCycleConfig cfg;
    cfg.max_lr = 1.0;
    cfg.total_steps = total;
    int peaks = 0;
    for (std::int64_t s = 0; s < total; ++s) {
      const double lr = onecycle_lr(s, cfg);
      REQUIRE(lr > 0.0);
      if (lr == 1.0) ++peaks;
    }
    CHECK(peaks == 1);
  }
}
