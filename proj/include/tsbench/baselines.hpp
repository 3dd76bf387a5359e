#pragma once
// 1-nearest-neighbor classifiers under Euclidean and dynamic time warping
// distances. Multivariate series use dependent DTW: the per-cell cost sums
// squared differences across channels at a timestep pair.

#include <cstdint>
#include <optional>
#include <span>

#include "tsbench/datasets.hpp"

namespace tsbench {

enum class DistanceKind { Euclidean, Dtw };

double euclidean_distance(const Series& a, const Series& b);

// Optimal warping cost with steps {(1,0),(0,1),(1,1)}, squared per-cell cost
// and a final square root. `window` is a Sakoe-Chiba band half-width;
// nullopt = unconstrained. window = 0 on equal lengths reduces to Euclidean.
double dtw_distance(const Series& a, const Series& b,
                    std::optional<std::int64_t> window = std::nullopt);

// Label of the closest training sample; distance ties break to the lowest
// training index.
int one_nn_classify(std::span<const LabeledSeries> train, const Series& query,
                    DistanceKind kind,
                    std::optional<std::int64_t> dtw_window = std::nullopt);

}  // namespace tsbench
