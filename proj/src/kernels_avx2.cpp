// AVX2 + FMA kernel variants. This translation unit is the only one compiled
// with -mavx2 -mfma; everything here is reached only after a runtime cpuid
// check, so the rest of the binary stays runnable on plain x86-64.

#include "tsbench/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "kernels_detail.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define TSB_X86 1
#else
#define TSB_X86 0
#endif

#if TSB_X86
#include <immintrin.h>
#endif

namespace tsbench::kernels {
namespace detail {

#if TSB_X86

namespace {

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  acc0 = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc0);
  double s = lane[0] + lane[1] + lane[2] + lane[3];
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_avx2(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  acc0 = _mm256_add_pd(acc0, acc1);
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc0);
  double s = lane[0] + lane[1] + lane[2] + lane[3];
  for (; i < n; ++i) s += x[i];
  return s;
}

// --------------------------------------------------------------------------
// Blocked GEMM with a 4x8 FMA micro-kernel. A-blocks and B-blocks are packed
// so the inner loop streams contiguous memory regardless of the transpose
// flags. Partial edge tiles go through a zero-padded temp tile.
// --------------------------------------------------------------------------

constexpr std::size_t MR = 4;
constexpr std::size_t NR = 8;
constexpr std::size_t MC = 64;
constexpr std::size_t KC = 256;
constexpr std::size_t NC = 1024;

inline double a_at(const double* a, std::size_t lda, bool trans, std::size_t i,
                   std::size_t p) {
  return trans ? a[p * lda + i] : a[i * lda + p];
}
inline double b_at(const double* b, std::size_t ldb, bool trans, std::size_t p,
                   std::size_t j) {
  return trans ? b[j * ldb + p] : b[p * ldb + j];
}

// Ap: ceil(mc/MR) panels, each kc*MR, column-of-panel contiguous. alpha is
// folded in here so the micro-kernel never sees it.
void pack_a(const double* a, std::size_t lda, bool trans, std::size_t i0,
            std::size_t p0, std::size_t mc, std::size_t kc, double alpha,
            double* ap) {
  for (std::size_t ir = 0; ir < mc; ir += MR) {
    const std::size_t rows = std::min(MR, mc - ir);
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t r = 0; r < MR; ++r)
        *ap++ = (r < rows) ? alpha * a_at(a, lda, trans, i0 + ir + r, p0 + p) : 0.0;
    }
  }
}

// Bp: ceil(nc/NR) panels, each kc*NR, row-of-panel contiguous.
void pack_b(const double* b, std::size_t ldb, bool trans, std::size_t p0,
            std::size_t j0, std::size_t kc, std::size_t nc, double* bp) {
  for (std::size_t jr = 0; jr < nc; jr += NR) {
    const std::size_t cols = std::min(NR, nc - jr);
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t c = 0; c < NR; ++c)
        *bp++ = (c < cols) ? b_at(b, ldb, trans, p0 + p, j0 + jr + c) : 0.0;
    }
  }
}

// C_tile(4x8) += Ap_panel * Bp_panel
void kernel_4x8(std::size_t kc, const double* ap, const double* bp, double* c,
                std::size_t ldc) {
  __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
  __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
  __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
  __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
  for (std::size_t p = 0; p < kc; ++p) {
    const __m256d b0 = _mm256_loadu_pd(bp + p * NR);
    const __m256d b1 = _mm256_loadu_pd(bp + p * NR + 4);
    __m256d a0 = _mm256_set1_pd(ap[p * MR + 0]);
    c00 = _mm256_fmadd_pd(a0, b0, c00);
    c01 = _mm256_fmadd_pd(a0, b1, c01);
    a0 = _mm256_set1_pd(ap[p * MR + 1]);
    c10 = _mm256_fmadd_pd(a0, b0, c10);
    c11 = _mm256_fmadd_pd(a0, b1, c11);
    a0 = _mm256_set1_pd(ap[p * MR + 2]);
    c20 = _mm256_fmadd_pd(a0, b0, c20);
    c21 = _mm256_fmadd_pd(a0, b1, c21);
    a0 = _mm256_set1_pd(ap[p * MR + 3]);
    c30 = _mm256_fmadd_pd(a0, b0, c30);
    c31 = _mm256_fmadd_pd(a0, b1, c31);
  }
  _mm256_storeu_pd(c + 0 * ldc, _mm256_add_pd(_mm256_loadu_pd(c + 0 * ldc), c00));
  _mm256_storeu_pd(c + 0 * ldc + 4, _mm256_add_pd(_mm256_loadu_pd(c + 0 * ldc + 4), c01));
  _mm256_storeu_pd(c + 1 * ldc, _mm256_add_pd(_mm256_loadu_pd(c + 1 * ldc), c10));
  _mm256_storeu_pd(c + 1 * ldc + 4, _mm256_add_pd(_mm256_loadu_pd(c + 1 * ldc + 4), c11));
  _mm256_storeu_pd(c + 2 * ldc, _mm256_add_pd(_mm256_loadu_pd(c + 2 * ldc), c20));
  _mm256_storeu_pd(c + 2 * ldc + 4, _mm256_add_pd(_mm256_loadu_pd(c + 2 * ldc + 4), c21));
  _mm256_storeu_pd(c + 3 * ldc, _mm256_add_pd(_mm256_loadu_pd(c + 3 * ldc), c30));
  _mm256_storeu_pd(c + 3 * ldc + 4, _mm256_add_pd(_mm256_loadu_pd(c + 3 * ldc + 4), c31));
}

void gemm_avx2(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
               std::size_t k, double alpha, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double beta, double* c,
               std::size_t ldc) {
  // Pre-apply beta so every k-block can simply accumulate.
  if (beta == 0.0) {
    for (std::size_t i = 0; i < m; ++i) std::memset(c + i * ldc, 0, n * sizeof(double));
  } else if (beta != 1.0) {
    for (std::size_t i = 0; i < m; ++i) scale_avx2(beta, c + i * ldc, n);
  }
  if (m == 0 || n == 0 || k == 0 || alpha == 0.0) return;

  thread_local std::vector<double> ap_buf;
  thread_local std::vector<double> bp_buf;
  ap_buf.resize(((MC + MR - 1) / MR) * MR * KC);
  bp_buf.resize(((NC + NR - 1) / NR) * NR * KC);

  for (std::size_t jc = 0; jc < n; jc += NC) {
    const std::size_t nc = std::min(NC, n - jc);
    for (std::size_t pc = 0; pc < k; pc += KC) {
      const std::size_t kc = std::min(KC, k - pc);
      pack_b(b, ldb, trans_b, pc, jc, kc, nc, bp_buf.data());
      for (std::size_t ic = 0; ic < m; ic += MC) {
        const std::size_t mc = std::min(MC, m - ic);
        pack_a(a, lda, trans_a, ic, pc, mc, kc, alpha, ap_buf.data());
        const std::size_t row_panels = (mc + MR - 1) / MR;
        const std::size_t col_panels = (nc + NR - 1) / NR;
        for (std::size_t ir = 0; ir < row_panels; ++ir) {
          const std::size_t rows = std::min(MR, mc - ir * MR);
          const double* ap = ap_buf.data() + ir * kc * MR;
          for (std::size_t jr = 0; jr < col_panels; ++jr) {
            const std::size_t cols = std::min(NR, nc - jr * NR);
            const double* bp = bp_buf.data() + jr * kc * NR;
            double* c_tile = c + (ic + ir * MR) * ldc + jc + jr * NR;
            if (rows == MR && cols == NR) {
              kernel_4x8(kc, ap, bp, c_tile, ldc);
            } else {
              alignas(32) double tmp[MR * NR] = {0};
              kernel_4x8(kc, ap, bp, tmp, NR);
              for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t cc = 0; cc < cols; ++cc)
                  c_tile[r * ldc + cc] += tmp[r * NR + cc];
            }
          }
        }
      }
    }
  }
}

}  // namespace

bool avx2_available() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

KernelTable avx2_table() {
  return KernelTable{dot_avx2, axpy_avx2, add_avx2, sub_avx2,
                     mul_avx2, scale_avx2, sum_avx2, gemm_avx2};
}

#else  // !TSB_X86

bool avx2_available() { return false; }
KernelTable avx2_table() { return KernelTable{}; }

#endif

}  // namespace detail
}  // namespace tsbench::kernels
