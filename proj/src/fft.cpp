#include "scpt/fft.hpp"

#include <cmath>

#include "scpt/errors.hpp"

namespace scpt {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_radix2(std::vector<cplx>& a, bool inverse) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw Error("fft: length must be a power of two");

  // bit-reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
    const cplx wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        cplx u = a[i + k];
        cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }

  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& v : a) v *= inv_n;
  }
}

std::vector<cplx> fft_real_padded(const std::vector<double>& x) {
  const size_t np = next_pow2(x.size());
  std::vector<cplx> a(np, cplx(0.0, 0.0));
  for (size_t i = 0; i < x.size(); ++i) a[i] = cplx(x[i], 0.0);
  fft_radix2(a, false);
  return a;
}

}  // namespace scpt
