#include <doctest.h>

#include <cmath>
#include <complex>

#include "tsbench/augment.hpp"
#include "tsbench/errors.hpp"
#include "tsbench/fft.hpp"
#include "tsbench/rng.hpp"

using namespace tsbench;

namespace {

Series random_series(Rng& rng, std::int64_t c, std::int64_t L) {
  Series s(c, L);
  for (auto& v : s.values) v = rng.normal();
  return s;
}

}  // namespace

TEST_CASE("deterministic primitives") {
  Series x(1, 3);
  x.values = {1, -2, 3};
  CHECK(negate(x).values == std::vector<double>{-1, 2, -3});
  CHECK(circular_shift(x, 3).values == x.values);    // shift by exactly L
  CHECK(circular_shift(x, 0).values == x.values);
  CHECK(circular_shift(x, 1).values == std::vector<double>{-2, 3, 1});
  CHECK(scale_values(x, 2.0).values == std::vector<double>{2, -4, 6});
}

TEST_CASE("jitter with zero sigma is the identity") {
  Rng rng(1);
  Series x = random_series(rng, 2, 16);
  AugmentParams p;
  p.jitter_sigma = 0.0;
  Series y = augment(AugmentKind::Jitter, x, p, rng);
  CHECK(y.values == x.values);
}

TEST_CASE("identity parameter settings reproduce the input for every kind") {
  Rng rng(2);
  Series x = random_series(rng, 2, 20);
  const AugmentParams id = AugmentParams::identity();
  for (int k = 0; k < kAugmentBankSize; ++k) {
    const auto kind = static_cast<AugmentKind>(k);
    if (kind == AugmentKind::Negation) continue;  // negation has no strength knob
    Rng r(3);
    Series y = augment(kind, x, id, r);
    INFO("kind ", augment_kind_name(kind));
    CHECK(y.values == x.values);
    CHECK(y.channels == x.channels);
    CHECK(y.length == x.length);
  }
}

TEST_CASE("default-strength augmentations preserve shape and finiteness") {
  Rng rng(4);
  Series x = random_series(rng, 3, 33);
  const AugmentParams p;
  for (int k = 0; k < kAugmentBankSize; ++k) {
    Series y = augment(static_cast<AugmentKind>(k), x, p, rng);
    INFO("kind ", augment_kind_name(static_cast<AugmentKind>(k)));
    CHECK(y.channels == x.channels);
    CHECK(y.length == x.length);
    for (double v : y.values) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("batch augmentation uses independent randomness per sample") {
  Rng rng(5);
  Series x = random_series(rng, 1, 32);
  const AugmentParams p;
  Series a = augment(AugmentKind::Jitter, x, p, rng);
  Series b = augment(AugmentKind::Jitter, x, p, rng);
  CHECK(a.values != b.values);
}

TEST_CASE("sample_one_augmentation") {
  SUBCASE("bank has exactly 12 kinds") { CHECK(kAugmentBankSize == 12); }
  SUBCASE("seeded draws reproduce") {
    Rng a(7), b(7);
    for (int i = 0; i < 50; ++i)
      CHECK(sample_one_augmentation(a) == sample_one_augmentation(b));
  }
  SUBCASE("draws are uniform within 3 sigma over 1e5 trials") {
    Rng rng(8);
    const int n = 100000;
    int counts[kAugmentBankSize] = {0};
    for (int i = 0; i < n; ++i) counts[static_cast<int>(sample_one_augmentation(rng))]++;
    const double expect = static_cast<double>(n) / kAugmentBankSize;
    const double sigma = std::sqrt(expect * (1.0 - 1.0 / kAugmentBankSize));
    for (int k = 0; k < kAugmentBankSize; ++k)
      CHECK(std::abs(counts[k] - expect) < 3.0 * sigma);
  }
}

TEST_CASE("crop_pair") {
  Rng rng(9);
  SUBCASE("rejects short series") {
    Series x = random_series(rng, 1, 7);
    CHECK_THROWS_AS(crop_pair(x, rng), UsageError);
  }
  SUBCASE("overlap is non-empty and crops are exact slices over many draws") {
    Series x = random_series(rng, 2, 10);
    for (int trial = 0; trial < 10000; ++trial) {
      CropPair cp = crop_pair(x, rng);
      REQUIRE(cp.overlap_end() > cp.overlap_begin());
      REQUIRE(cp.a0 <= cp.a1);
      REQUIRE(cp.b0 <= cp.b1);
      for (std::int64_t c = 0; c < 2; ++c) {
        for (std::int64_t t = cp.a0; t < cp.b0; ++t)
          REQUIRE(cp.x0.at(c, t - cp.a0) == x.at(c, t));
        for (std::int64_t t = cp.a1; t < cp.b1; ++t)
          REQUIRE(cp.x1.at(c, t - cp.a1) == x.at(c, t));
      }
    }
  }
}

TEST_CASE("frequency_augment") {
  Rng rng(10);
  SUBCASE("zero fractions are the identity") {
    Series x = random_series(rng, 1, 16);
    auto half = fft::rfft(x.values);
    auto orig = half;
    frequency_augment(half, 16, {0.0, 0.0, 0.5}, rng);
    CHECK(half == orig);
  }
  SUBCASE("removal zeroes coefficients and nothing else") {
    Series x = random_series(rng, 1, 16);
    auto half = fft::rfft(x.values);
    auto orig = half;
    frequency_augment(half, 16, {0.5, 0.0, 0.0}, rng);
    for (std::size_t k = 0; k < half.size(); ++k) {
      const bool untouched = half[k] == orig[k];
      const bool zeroed = half[k] == std::complex<double>(0.0, 0.0);
      CHECK((untouched || zeroed));
    }
  }
  SUBCASE("augmented spectra invert to real signals") {
    for (std::int64_t n : {15, 16}) {
      for (int trial = 0; trial < 50; ++trial) {
        Series x = random_series(rng, 1, n);
        auto half = fft::rfft(x.values);
        frequency_augment(half, n, {0.2, 0.3, 0.8}, rng);
        // Rebuild the full spectrum and inverse transform; imaginary parts
        // must vanish if conjugate symmetry was preserved.
        std::vector<std::complex<double>> full(n);
        for (std::size_t k = 0; k < half.size(); ++k) full[k] = half[k];
        for (std::size_t k = half.size(); k < static_cast<std::size_t>(n); ++k)
          full[k] = std::conj(full[n - k]);
        auto t = fft::ifft(full);
        for (const auto& v : t) REQUIRE(std::abs(v.imag()) < 1e-9);
      }
    }
  }
}
