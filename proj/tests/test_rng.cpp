#include <doctest.h>

#include <cmath>

#include "tsbench/rng.hpp"

using namespace tsbench;

TEST_CASE("seeded streams are reproducible and seed-sensitive") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    all_equal = all_equal && (va == b.next_u64());
    any_diff = any_diff || (va != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("derived streams are independent per name") {
  Rng a = Rng::derive(7, "split");
  Rng b = Rng::derive(7, "pretrain");
  Rng a2 = Rng::derive(7, "split");
  CHECK(a.next_u64() != b.next_u64());
  Rng a3 = Rng::derive(7, "split");
  CHECK(a3.next_u64() == a2.next_u64());
}

TEST_CASE("uniform stays in range with plausible mean") {
  Rng rng(1);
  double acc = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    acc += u;
  }
  CHECK(std::abs(acc / n - 0.5) < 0.01);
}

TEST_CASE("normal moments") {
  Rng rng(2);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
  }
  CHECK(std::abs(s1 / n) < 0.02);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("beta draws live in (0,1) and center correctly") {
  Rng rng(3);
  double acc = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.beta(0.2, 0.2);
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
    acc += x;
  }
  // Beta(a,a) has mean 1/2.
  CHECK(std::abs(acc / n - 0.5) < 0.02);
}

TEST_CASE("permutation is a permutation") {
  Rng rng(4);
  auto p = rng.permutation(257);
  std::vector<bool> seen(257, false);
  for (auto i : p) {
    REQUIRE(i < 257);
    REQUIRE(!seen[i]);
    seen[i] = true;
  }
}
