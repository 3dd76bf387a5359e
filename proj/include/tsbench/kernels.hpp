#pragma once
// Dense arithmetic kernels used by the tensor engine.
//
// Every primitive has a scalar reference implementation (kernels::ref) and,
// where the host supports it, a SIMD variant (AVX2+FMA on x86-64, NEON on
// aarch64). The backend is picked once at runtime; tests can pin a backend
// to check that all variants agree.

#include <cstddef>
#include <string>

namespace tsbench::kernels {

enum class Backend { Scalar, Avx2, Neon };

// Backend chosen for this process (detected on first use, or forced).
Backend active_backend();
std::string backend_name(Backend b);

// Returns true if the given backend can run on this host.
bool backend_supported(Backend b);

// Pin the backend (used by equivalence tests). Throws std::invalid_argument
// if the host cannot run it.
void force_backend(Backend b);

// ---------------------------------------------------------------------------
// Vector primitives. out/y may not alias a/b/x unless stated.
// ---------------------------------------------------------------------------

double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);  // y += alpha*x
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void scale(double alpha, double* x, std::size_t n);  // x *= alpha
double sum(const double* x, std::size_t n);

// ---------------------------------------------------------------------------
// General matrix multiply, row-major:
//   C (m x n, leading dim ldc) = alpha * op(A) * op(B) + beta * C
// op(A) is m x k (A is k x m when trans_a), op(B) is k x n.
// ---------------------------------------------------------------------------
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b,
          std::size_t ldb, double beta, double* c, std::size_t ldc);

// Scalar reference implementations. These are the oracles the SIMD variants
// are tested against; they stay naive on purpose.
namespace ref {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
double sum(const double* x, std::size_t n);
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b,
          std::size_t ldb, double beta, double* c, std::size_t ldc);
}  // namespace ref

}  // namespace tsbench::kernels
