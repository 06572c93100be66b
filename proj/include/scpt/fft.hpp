#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace scpt {

using cplx = std::complex<double>;

// In-place iterative radix-2 FFT. n must be a power of two.
// inverse=true applies the conjugate transform and the 1/n factor.
void fft_radix2(std::vector<cplx>& a, bool inverse);

// Smallest power of two >= n (n >= 1).
size_t next_pow2(size_t n);

// Forward DFT of a real signal zero-padded to the next power of two.
std::vector<cplx> fft_real_padded(const std::vector<double>& x);

}  // namespace scpt
