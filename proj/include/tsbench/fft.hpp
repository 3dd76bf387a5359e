#pragma once
// Complex and real FFTs for arbitrary lengths. Power-of-two sizes use the
// iterative radix-2 transform; everything else goes through Bluestein's
// chirp-z reduction to a power-of-two convolution.
//
// Conventions match numpy: forward transform is unnormalized, the inverse
// divides by N. rfft returns the floor(N/2)+1 non-redundant bins of a real
// input; irfft reconstructs a real signal of explicit length n.

#include <complex>
#include <cstddef>
#include <vector>

namespace tsbench::fft {

using cplx = std::complex<double>;

std::vector<cplx> fft(const std::vector<cplx>& input);
std::vector<cplx> ifft(const std::vector<cplx>& input);

// Half-spectrum of a real signal: floor(n/2)+1 bins.
std::vector<cplx> rfft(const double* x, std::size_t n);
std::vector<cplx> rfft(const std::vector<double>& x);

// Real signal of length n from a half-spectrum of floor(n/2)+1 bins.
std::vector<double> irfft(const std::vector<cplx>& half, std::size_t n);

}  // namespace tsbench::fft
