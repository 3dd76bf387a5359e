#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "tsbench/baselines.hpp"
#include "tsbench/errors.hpp"
#include "tsbench/rng.hpp"

using namespace tsbench;

namespace {

Series make(std::initializer_list<double> v) {
  Series s(1, static_cast<std::int64_t>(v.size()));
  std::copy(v.begin(), v.end(), s.values.begin());
  return s;
}

double brute_dtw(const Series& a, const Series& b) { return oracles::dtw(a, b); }

Series random_series(Rng& rng, std::int64_t c, std::int64_t l) {
  Series s(c, l);
  for (auto& v : s.values) v = rng.normal();
  return s;
}

}  // namespace

TEST_CASE("euclidean distance") {
  CHECK(euclidean_distance(make({1, 2, 3}), make({1, 2, 3})) == 0.0);
  CHECK(euclidean_distance(make({0, 0}), make({3, 4})) == doctest::Approx(5.0));
  CHECK_THROWS_AS(euclidean_distance(make({1, 2}), make({1, 2, 3})), ShapeError);
  Rng rng(0);
  for (int trial = 0; trial < 20; ++trial) {
    Series a = random_series(rng, 2, 9), b = random_series(rng, 2, 9);
    CHECK(euclidean_distance(a, b) == doctest::Approx(euclidean_distance(b, a)));
    CHECK(euclidean_distance(a, b) >= 0.0);
  }
}

TEST_CASE("dtw distance reference cases") {
  CHECK(dtw_distance(make({1, 2, 3}), make({1, 2, 3})) == 0.0);
  // The classic elastic match: the repeated 2 aligns at zero cost.
  CHECK(dtw_distance(make({1, 2, 3}), make({1, 2, 2, 3})) == 0.0);
  // Window 0 on equal lengths is the diagonal-only path, i.e. Euclidean.
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    Series a = random_series(rng, 1, 8), b = random_series(rng, 1, 8);
    CHECK(dtw_distance(a, b, 0) == doctest::Approx(euclidean_distance(a, b)));
  }
}

TEST_CASE("dtw never exceeds euclidean on equal lengths") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    Series a = random_series(rng, 1, 10), b = random_series(rng, 1, 10);
    CHECK(dtw_distance(a, b) <= euclidean_distance(a, b) + 1e-12);
  }
}

TEST_CASE("dtw equals exhaustive path enumeration for short series") {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const std::int64_t la = 1 + trial % 8, lb = 1 + (trial / 2) % 8;
    const std::int64_t ch = trial % 3 == 0 ? 2 : 1;  // dependent DTW too
    Series a = random_series(rng, ch, la), b = random_series(rng, ch, lb);
    REQUIRE(dtw_distance(a, b) == doctest::Approx(brute_dtw(a, b)).epsilon(1e-12));
    REQUIRE(dtw_distance(a, b) == doctest::Approx(dtw_distance(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("one nearest neighbor") {
  Rng rng(4);
  SUBCASE("query equal to a training sample returns its label") {
    std::vector<LabeledSeries> train;
    for (int i = 0; i < 5; ++i) train.push_back({random_series(rng, 1, 8), i});
    for (int i = 0; i < 5; ++i) {
      CHECK(one_nn_classify(train, train[i].series, DistanceKind::Euclidean) == i);
      CHECK(one_nn_classify(train, train[i].series, DistanceKind::Dtw) == i);
    }
  }
  SUBCASE("two-point set picks the nearer point") {
    std::vector<LabeledSeries> train{{make({0, 0}), 0}, {make({10, 10}), 1}};
    CHECK(one_nn_classify(train, make({1, 1}), DistanceKind::Euclidean) == 0);
    CHECK(one_nn_classify(train, make({9, 9}), DistanceKind::Euclidean) == 1);
  }
  SUBCASE("distance ties break to the lowest training index") {
    std::vector<LabeledSeries> train{{make({1, 1}), 3}, {make({1, 1}), 7}};
    CHECK(one_nn_classify(train, make({2, 2}), DistanceKind::Euclidean) == 3);
  }
  SUBCASE("matches an exhaustive distance scan on a random 20-sample set") {
    std::vector<LabeledSeries> train;
    for (int i = 0; i < 20; ++i) train.push_back({random_series(rng, 1, 12), i % 4});
    for (int q = 0; q < 10; ++q) {
      Series query = random_series(rng, 1, 12);
      for (DistanceKind kind : {DistanceKind::Euclidean, DistanceKind::Dtw}) {
        double best = std::numeric_limits<double>::infinity();
        int expect = -1;
        for (const auto& item : train) {
          const double d = kind == DistanceKind::Euclidean
                               ? euclidean_distance(item.series, query)
                               : brute_dtw(item.series, query);
          if (d < best) {
            best = d;
            expect = item.label;
          }
        }
        REQUIRE(one_nn_classify(train, query, kind) == expect);
      }
    }
  }
  SUBCASE("empty training set is rejected") {
    std::vector<LabeledSeries> train;
    CHECK_THROWS_AS(one_nn_classify(train, make({1}), DistanceKind::Euclidean),
                    UsageError);
  }
}
