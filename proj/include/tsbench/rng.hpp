#pragma once
// Deterministic random number generation. Everything in the project draws
// through this generator so that a (config, seed) pair reproduces bit-equal
// results on any platform; the C++ standard distributions are
// implementation-defined and therefore not used.

#include <cstdint>
#include <string_view>
#include <vector>

namespace tsbench {

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream derived from (seed, name). Streams with distinct
  // names are decorrelated regardless of draw order on the parent.
  static Rng derive(std::uint64_t seed, std::string_view stream);
  static std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

  std::uint64_t next_u64();

  double uniform();                          // [0, 1)
  double uniform(double lo, double hi);      // [lo, hi)
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // [lo, hi] inclusive
  double normal();                           // standard normal (Box-Muller)
  double normal(double mean, double sigma);
  double gamma(double shape);                // unit scale
  double beta(double a, double b);
  bool bernoulli(double p);

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tsbench
