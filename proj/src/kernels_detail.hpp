#pragma once
// Internal glue between the kernel dispatcher and the per-ISA translation
// units. Not installed; include only from src/kernels*.cpp.

#include <cstddef>

namespace tsbench::kernels {

struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*add)(const double*, const double*, double*, std::size_t);
  void (*sub)(const double*, const double*, double*, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  void (*gemm)(bool, bool, std::size_t, std::size_t, std::size_t, double,
               const double*, std::size_t, const double*, std::size_t, double,
               double*, std::size_t);
};

namespace detail {
bool avx2_available();
KernelTable avx2_table();
bool neon_available();
KernelTable neon_table();
}  // namespace detail

}  // namespace tsbench::kernels
