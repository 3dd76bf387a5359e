#include "tsbench/kernels.hpp"

#include <atomic>
#include <stdexcept>

#include "kernels_detail.hpp"

namespace tsbench::kernels {

// ---------------------------------------------------------------------------
// Scalar reference kernels
// ---------------------------------------------------------------------------
namespace ref {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b,
          std::size_t ldb, double beta, double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = trans_a ? a[p * lda + i] : a[i * lda + p];
        const double bv = trans_b ? b[j * ldb + p] : b[p * ldb + j];
        acc += av * bv;
      }
      c[i * ldc + j] = alpha * acc + (beta == 0.0 ? 0.0 : beta * c[i * ldc + j]);
    }
  }
}

}  // namespace ref

// ---------------------------------------------------------------------------
// Backend dispatch
// ---------------------------------------------------------------------------

namespace {

KernelTable scalar_table() {
  return KernelTable{ref::dot, ref::axpy, ref::add, ref::sub,
                     ref::mul, ref::scale, ref::sum, ref::gemm};
}

KernelTable table_for(Backend b) {
  switch (b) {
    case Backend::Avx2:
      return detail::avx2_table();
    case Backend::Neon:
      return detail::neon_table();
    case Backend::Scalar:
    default:
      return scalar_table();
  }
}

std::atomic<bool> g_initialized{false};
Backend g_backend = Backend::Scalar;
KernelTable g_table = scalar_table();

Backend detect_backend() {
  if (detail::avx2_available()) return Backend::Avx2;
  if (detail::neon_available()) return Backend::Neon;
  return Backend::Scalar;
}

const KernelTable& table() {
  if (!g_initialized.load(std::memory_order_acquire)) {
    Backend b = detect_backend();
    g_table = table_for(b);
    g_backend = b;
    g_initialized.store(true, std::memory_order_release);
  }
  return g_table;
}

}  // namespace

Backend active_backend() {
  table();
  return g_backend;
}

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2: return detail::avx2_available();
    case Backend::Neon: return detail::neon_available();
  }
  return false;
}

void force_backend(Backend b) {
  if (!backend_supported(b))
    throw std::invalid_argument("kernel backend not supported on this host: " +
                                backend_name(b));
  g_table = table_for(b);
  g_backend = b;
  g_initialized.store(true, std::memory_order_release);
}

double dot(const double* a, const double* b, std::size_t n) { return table().dot(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { table().axpy(alpha, x, y, n); }
void add(const double* a, const double* b, double* out, std::size_t n) { table().add(a, b, out, n); }
void sub(const double* a, const double* b, double* out, std::size_t n) { table().sub(a, b, out, n); }
void mul(const double* a, const double* b, double* out, std::size_t n) { table().mul(a, b, out, n); }
void scale(double alpha, double* x, std::size_t n) { table().scale(alpha, x, n); }
double sum(const double* x, std::size_t n) { return table().sum(x, n); }

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b,
          std::size_t ldb, double beta, double* c, std::size_t ldc) {
  table().gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

}  // namespace tsbench::kernels
