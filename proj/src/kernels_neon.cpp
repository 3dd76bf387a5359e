// NEON kernel variants for aarch64, where 2-lane f64 vectors and FMA are
// baseline. Compiled out entirely on other targets.

#include "tsbench/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "kernels_detail.hpp"

#if defined(__aarch64__)
#define TSB_NEON 1
#include <arm_neon.h>
#else
#define TSB_NEON 0
#endif

namespace tsbench::kernels {
namespace detail {

#if TSB_NEON

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  for (; i + 2 <= n; i += 2)
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
  double s = vaddvq_f64(acc0) + vaddvq_f64(acc1);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_neon(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_neon(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_neon(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_neon(double alpha, double* x, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

double sum_neon(const double* x, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
    acc1 = vaddq_f64(acc1, vld1q_f64(x + i + 2));
  }
  for (; i + 2 <= n; i += 2) acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
  double s = vaddvq_f64(acc0) + vaddvq_f64(acc1);
  for (; i < n; ++i) s += x[i];
  return s;
}

// Same blocked structure as the AVX2 gemm with a 4x4 micro-kernel.

constexpr std::size_t MR = 4;
constexpr std::size_t NR = 4;
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

void kernel_4x4(std::size_t kc, const double* ap, const double* bp, double* c,
                std::size_t ldc) {
  float64x2_t c00 = vdupq_n_f64(0.0), c01 = vdupq_n_f64(0.0);
  float64x2_t c10 = vdupq_n_f64(0.0), c11 = vdupq_n_f64(0.0);
  float64x2_t c20 = vdupq_n_f64(0.0), c21 = vdupq_n_f64(0.0);
  float64x2_t c30 = vdupq_n_f64(0.0), c31 = vdupq_n_f64(0.0);
  for (std::size_t p = 0; p < kc; ++p) {
    const float64x2_t b0 = vld1q_f64(bp + p * NR);
    const float64x2_t b1 = vld1q_f64(bp + p * NR + 2);
    float64x2_t a0 = vdupq_n_f64(ap[p * MR + 0]);
    c00 = vfmaq_f64(c00, a0, b0);
    c01 = vfmaq_f64(c01, a0, b1);
    a0 = vdupq_n_f64(ap[p * MR + 1]);
    c10 = vfmaq_f64(c10, a0, b0);
    c11 = vfmaq_f64(c11, a0, b1);
    a0 = vdupq_n_f64(ap[p * MR + 2]);
    c20 = vfmaq_f64(c20, a0, b0);
    c21 = vfmaq_f64(c21, a0, b1);
    a0 = vdupq_n_f64(ap[p * MR + 3]);
    c30 = vfmaq_f64(c30, a0, b0);
    c31 = vfmaq_f64(c31, a0, b1);
  }
  vst1q_f64(c + 0 * ldc, vaddq_f64(vld1q_f64(c + 0 * ldc), c00));
  vst1q_f64(c + 0 * ldc + 2, vaddq_f64(vld1q_f64(c + 0 * ldc + 2), c01));
  vst1q_f64(c + 1 * ldc, vaddq_f64(vld1q_f64(c + 1 * ldc), c10));
  vst1q_f64(c + 1 * ldc + 2, vaddq_f64(vld1q_f64(c + 1 * ldc + 2), c11));
  vst1q_f64(c + 2 * ldc, vaddq_f64(vld1q_f64(c + 2 * ldc), c20));
  vst1q_f64(c + 2 * ldc + 2, vaddq_f64(vld1q_f64(c + 2 * ldc + 2), c21));
  vst1q_f64(c + 3 * ldc, vaddq_f64(vld1q_f64(c + 3 * ldc), c30));
  vst1q_f64(c + 3 * ldc + 2, vaddq_f64(vld1q_f64(c + 3 * ldc + 2), c31));
}

void gemm_neon(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
               std::size_t k, double alpha, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double beta, double* c,
               std::size_t ldc) {
  if (beta == 0.0) {
    for (std::size_t i = 0; i < m; ++i) std::memset(c + i * ldc, 0, n * sizeof(double));
  } else if (beta != 1.0) {
    for (std::size_t i = 0; i < m; ++i) scale_neon(beta, c + i * ldc, n);
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
              kernel_4x4(kc, ap, bp, c_tile, ldc);
            } else {
              alignas(16) double tmp[MR * NR] = {0};
              kernel_4x4(kc, ap, bp, tmp, NR);
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

bool neon_available() { return true; }

KernelTable neon_table() {
  return KernelTable{dot_neon, axpy_neon, add_neon, sub_neon,
                     mul_neon, scale_neon, sum_neon, gemm_neon};
}

#else  // !TSB_NEON

bool neon_available() { return false; }
KernelTable neon_table() { return KernelTable{}; }

#endif

}  // namespace detail
}  // namespace tsbench::kernels
