#include "tsbench/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tsbench/errors.hpp"

namespace tsbench {

namespace {

// Sum over channels of squared differences at a timestep pair.
double cell_cost(const Series& a, std::int64_t i, const Series& b, std::int64_t j) {
  double acc = 0.0;
  for (std::int64_t c = 0; c < a.channels; ++c) {
    const double d = a.at(c, i) - b.at(c, j);
    acc += d * d;
  }
  return acc;
}

}  // namespace

double euclidean_distance(const Series& a, const Series& b) {
  if (a.channels != b.channels || a.length != b.length)
    throw ShapeError("euclidean_distance: series shapes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double dtw_distance(const Series& a, const Series& b, std::optional<std::int64_t> window) {
  if (a.length < 1 || b.length < 1) throw UsageError("dtw_distance: empty series");
  if (a.channels != b.channels) throw ShapeError("dtw_distance: channel counts differ");
  const std::int64_t n = a.length, m = b.length;
  std::int64_t w = window.value_or(std::max(n, m));
  if (w < 0) throw UsageError("dtw_distance: negative window");
  // A band narrower than the length difference admits no path.
  w = std::max(w, n > m ? n - m : m - n);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(static_cast<std::size_t>(m + 1), kInf);
  std::vector<double> cur(static_cast<std::size_t>(m + 1), kInf);
  prev[0] = 0.0;
  for (std::int64_t i = 1; i <= n; ++i) {
    std::fill(cur.begin(), cur.end(), kInf);
    const std::int64_t j_lo = std::max<std::int64_t>(1, i - w);
    const std::int64_t j_hi = std::min<std::int64_t>(m, i + w);
    for (std::int64_t j = j_lo; j <= j_hi; ++j) {
      const double best = std::min({prev[j], cur[j - 1], prev[j - 1]});
      cur[j] = cell_cost(a, i - 1, b, j - 1) + best;
    }
    std::swap(prev, cur);
  }
  return std::sqrt(prev[m]);
}

int one_nn_classify(std::span<const LabeledSeries> train, const Series& query,
                    DistanceKind kind, std::optional<std::int64_t> dtw_window) {
  if (train.empty()) throw UsageError("one_nn_classify: empty training set");
  double best = std::numeric_limits<double>::infinity();
  int best_label = train[0].label;
  for (const auto& item : train) {
    const double d = kind == DistanceKind::Euclidean
                         ? euclidean_distance(item.series, query)
                         : dtw_distance(item.series, query, dtw_window);
    if (d < best) {
      best = d;
      best_label = item.label;
    }
  }
  return best_label;
}

}  // namespace tsbench
