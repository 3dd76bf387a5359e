#include "tsbench/fft.hpp"

#include <cmath>
#include <numbers>

#include "tsbench/errors.hpp"

namespace tsbench::fft {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 Cooley-Tukey. n must be a power of two.
void fft_pow2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const cplx u = a[i + j];
        const cplx v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv_n;
  }
}

// Bluestein chirp-z: DFT of arbitrary n via a 2n-ish power-of-two convolution.
std::vector<cplx> bluestein(const std::vector<cplx>& x) {
  const std::size_t n = x.size();
  const std::size_t m = next_pow2(2 * n - 1);
  // chirp w_j = exp(-i*pi*j^2/n); j^2 taken mod 2n to keep the angle small.
  std::vector<cplx> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t j2 = (j * j) % (2 * n);
    const double ang = -kPi * static_cast<double>(j2) / static_cast<double>(n);
    w[j] = cplx(std::cos(ang), std::sin(ang));
  }
  std::vector<cplx> a(m, cplx(0, 0)), b(m, cplx(0, 0));
  for (std::size_t j = 0; j < n; ++j) a[j] = x[j] * w[j];
  b[0] = std::conj(w[0]);
  for (std::size_t j = 1; j < n; ++j) b[j] = b[m - j] = std::conj(w[j]);
  fft_pow2(a, false);
  fft_pow2(b, false);
  for (std::size_t j = 0; j < m; ++j) a[j] *= b[j];
  fft_pow2(a, true);
  std::vector<cplx> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = w[k] * a[k];
  return out;
}

}  // namespace

std::vector<cplx> fft(const std::vector<cplx>& input) {
  if (input.empty()) throw UsageError("fft: empty input");
  if (is_pow2(input.size())) {
    std::vector<cplx> a = input;
    fft_pow2(a, false);
    return a;
  }
  return bluestein(input);
}

std::vector<cplx> ifft(const std::vector<cplx>& input) {
  // ifft(x) = conj(fft(conj(x))) / n
  const std::size_t n = input.size();
  std::vector<cplx> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = std::conj(input[i]);
  std::vector<cplx> f = fft(c);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (auto& v : f) v = std::conj(v) * inv_n;
  return f;
}

std::vector<cplx> rfft(const double* x, std::size_t n) {
  std::vector<cplx> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = cplx(x[i], 0.0);
  std::vector<cplx> f = fft(c);
  f.resize(n / 2 + 1);
  return f;
}

std::vector<cplx> rfft(const std::vector<double>& x) { return rfft(x.data(), x.size()); }

std::vector<double> irfft(const std::vector<cplx>& half, std::size_t n) {
  if (half.size() != n / 2 + 1)
    throw ShapeError("irfft: half-spectrum size does not match target length");
  std::vector<cplx> full(n);
  for (std::size_t k = 0; k < half.size(); ++k) full[k] = half[k];
  for (std::size_t k = half.size(); k < n; ++k) full[k] = std::conj(full[n - k]);
  std::vector<cplx> t = ifft(full);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = t[i].real();
  return out;
}

}  // namespace tsbench::fft
