#pragma once
// Independent brute-force oracles used by unit tests and the acceptance
// suite. These re-implement contracts with explicit loops and explicit
// masking and share no code with the library paths they check.

#include <cmath>
#include <limits>
#include <vector>

#include "tsbench/datasets.hpp"
#include "tsbench/tensor.hpp"

namespace tsbench::oracles {

inline double cos_sim(const double* a, const double* b, std::int64_t d) {
  double dot = 0, na = 0, nb = 0;
  for (std::int64_t i = 0; i < d; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Pairwise contrastive loss over the explicit 2N x 2N similarity matrix; the
// denominator of anchor i excludes i and its positive by index.
inline double nt_xent(const Tensor& h0, const Tensor& h1, double tau) {
  const std::int64_t n = h0.dim(0), d = h0.dim(1);
  std::vector<const double*> rows;
  for (std::int64_t i = 0; i < n; ++i) rows.push_back(h0.data() + i * d);
  for (std::int64_t i = 0; i < n; ++i) rows.push_back(h1.data() + i * d);
  double total = 0.0;
  for (std::int64_t i = 0; i < 2 * n; ++i) {
    const std::int64_t j = i < n ? i + n : i - n;
    double denom = 0.0;
    for (std::int64_t k = 0; k < 2 * n; ++k) {
      if (k == i || k == j) continue;
      denom += std::exp(cos_sim(rows[i], rows[k], d) / tau);
    }
    total += -std::log(std::exp(cos_sim(rows[i], rows[j], d) / tau) / denom);
  }
  return total / static_cast<double>(2 * n);
}

// One granularity level of the temporal/instance loss, dot-product
// similarities, positives included in the softmax, self excluded.
inline double ts2vec_level(const Tensor& z0, const Tensor& z1) {
  const std::int64_t n = z0.dim(0), t = z0.dim(1), d = z0.dim(2);
  auto at = [&](const Tensor& z, std::int64_t i, std::int64_t tt) {
    return z.data() + (i * t + tt) * d;
  };
  auto dot = [&](const double* a, const double* b) {
    double s = 0;
    for (std::int64_t k = 0; k < d; ++k) s += a[k] * b[k];
    return s;
  };
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(2 * n * t);
  if (n > 1) {
    double inst = 0.0;
    for (std::int64_t tt = 0; tt < t; ++tt)
      for (std::int64_t i = 0; i < n; ++i)
        for (int dir = 0; dir < 2; ++dir) {
          const Tensor& za = dir == 0 ? z0 : z1;
          const Tensor& zb = dir == 0 ? z1 : z0;
          double denom = 0.0;
          for (std::int64_t j = 0; j < n; ++j) {
            denom += std::exp(dot(at(za, i, tt), at(zb, j, tt)));
            if (j != i) denom += std::exp(dot(at(za, i, tt), at(za, j, tt)));
          }
          inst += -std::log(std::exp(dot(at(za, i, tt), at(zb, i, tt))) / denom);
        }
    loss += inst * inv;
  }
  if (t > 1) {
    double temp = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t tt = 0; tt < t; ++tt)
        for (int dir = 0; dir < 2; ++dir) {
          const Tensor& za = dir == 0 ? z0 : z1;
          const Tensor& zb = dir == 0 ? z1 : z0;
          double denom = 0.0;
          for (std::int64_t uu = 0; uu < t; ++uu) {
            denom += std::exp(dot(at(za, i, tt), at(zb, i, uu)));
            if (uu != tt) denom += std::exp(dot(at(za, i, tt), at(za, i, uu)));
          }
          temp += -std::log(std::exp(dot(at(za, i, tt), at(zb, i, tt))) / denom);
        }
    loss += temp * inv;
  }
  return loss;
}

inline double ts2vec(Tensor z0, Tensor z1) {
  double total = ts2vec_level(z0, z1);
  std::int64_t levels = 1;
  while (z0.dim(1) > 1) {
    z0 = max_pool_time(z0);
    z1 = max_pool_time(z1);
    total += ts2vec_level(z0, z1);
    ++levels;
  }
  return total / static_cast<double>(levels);
}

inline double mixingup(const Tensor& hi, const Tensor& hj, const Tensor& hk,
                       const std::vector<double>& lambda, double tau) {
  const std::int64_t n = hk.dim(0), d = hk.dim(1);
  double total = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double denom = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      denom += std::exp(cos_sim(hk.data() + i * d, hi.data() + j * d, d) / tau);
      denom += std::exp(cos_sim(hk.data() + i * d, hj.data() + j * d, d) / tau);
    }
    const double pi =
        std::exp(cos_sim(hk.data() + i * d, hi.data() + i * d, d) / tau) / denom;
    const double pj =
        std::exp(cos_sim(hk.data() + i * d, hj.data() + i * d, d) / tau) / denom;
    total += -lambda[i] * std::log(pi) - (1.0 - lambda[i]) * std::log(pj);
  }
  return total / static_cast<double>(n);
}

// Exhaustive warping-path enumeration with steps {(1,0),(0,1),(1,1)};
// deliberately not the DP recurrence.
inline void dtw_walk(const Series& a, const Series& b, std::int64_t i, std::int64_t j,
                     double acc, double& best) {
  double cost = 0;
  for (std::int64_t c = 0; c < a.channels; ++c) {
    const double d = a.at(c, i) - b.at(c, j);
    cost += d * d;
  }
  acc += cost;
  if (acc >= best) return;
  if (i == a.length - 1 && j == b.length - 1) {
    best = acc;
    return;
  }
  if (i + 1 < a.length) dtw_walk(a, b, i + 1, j, acc, best);
  if (j + 1 < b.length) dtw_walk(a, b, i, j + 1, acc, best);
  if (i + 1 < a.length && j + 1 < b.length) dtw_walk(a, b, i + 1, j + 1, acc, best);
}

inline double dtw(const Series& a, const Series& b) {
  double best = std::numeric_limits<double>::infinity();
  dtw_walk(a, b, 0, 0, 0.0, best);
  return std::sqrt(best);
}

}  // namespace tsbench::oracles
