// fft.hpp: complex FFT (radix-2 and Bluestein), real-signal helpers and
// FFT-based linear convolution.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "hlc/common.hpp"

namespace hlc::fft {

using cplx = std::complex<double>;

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

// In-place iterative radix-2 transform, unscaled. Size must be a power of 2.
inline void transform_pow2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * kPi / static_cast<double>(len);
    const cplx wlen = std::polar(1.0, ang);
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cplx u = a[i + k];
        const cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Bluestein's chirp-z algorithm for arbitrary sizes, unscaled.
inline void transform_bluestein(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  const double sign = inverse ? 1.0 : -1.0;
  // Chirp exponents are reduced mod 2n to keep the angle argument small.
  std::vector<cplx> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    const unsigned long long kk =
        (static_cast<unsigned long long>(k) * k) % (2ull * n);
    chirp[k] = std::polar(1.0, sign * kPi * static_cast<double>(kk) /
                                   static_cast<double>(n));
  }
  const std::size_t m = next_pow2(2 * n - 1);
  std::vector<cplx> x(m, cplx(0.0, 0.0));
  std::vector<cplx> y(m, cplx(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
  y[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    y[k] = std::conj(chirp[k]);
    y[m - k] = y[k];
  }
  transform_pow2(x, false);
  transform_pow2(y, false);
  for (std::size_t k = 0; k < m; ++k) x[k] *= y[k];
  transform_pow2(x, true);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * scale * chirp[k];
}

}  // namespace detail

/// Unscaled forward DFT of arbitrary size.
inline std::vector<cplx> forward(std::vector<cplx> a) {
  if (is_pow2(a.size()))
    detail::transform_pow2(a, false);
  else if (!a.empty())
    detail::transform_bluestein(a, false);
  return a;
}

/// Inverse DFT, scaled by 1/N.
inline std::vector<cplx> inverse(std::vector<cplx> a) {
  if (is_pow2(a.size()))
    detail::transform_pow2(a, true);
  else if (!a.empty())
    detail::transform_bluestein(a, true);
  const double scale = a.empty() ? 1.0 : 1.0 / static_cast<double>(a.size());
  for (auto& v : a) v *= scale;
  return a;
}

/// Forward DFT of a real signal zero-padded (or truncated is an error) to
/// nfft bins.
inline Eigen::VectorXcd forward_real(const Eigen::VectorXd& x, int nfft) {
  if (nfft < 1) throw input_error("fft: nfft must be >= 1");
  if (x.size() > nfft)
    throw input_error("fft: signal longer than requested transform size");
  std::vector<cplx> buf(static_cast<std::size_t>(nfft), cplx(0.0, 0.0));
  for (int i = 0; i < x.size(); ++i) buf[static_cast<std::size_t>(i)] = x[i];
  buf = forward(std::move(buf));
  Eigen::VectorXcd out(nfft);
  for (int i = 0; i < nfft; ++i) out[i] = buf[static_cast<std::size_t>(i)];
  return out;
}

/// Inverse DFT keeping only the real part.
inline Eigen::VectorXd inverse_real(const Eigen::VectorXcd& bins) {
  std::vector<cplx> buf(static_cast<std::size_t>(bins.size()));
  for (int i = 0; i < bins.size(); ++i) buf[static_cast<std::size_t>(i)] = bins[i];
  buf = inverse(std::move(buf));
  Eigen::VectorXd out(bins.size());
  for (int i = 0; i < bins.size(); ++i)
    out[i] = buf[static_cast<std::size_t>(i)].real();
  return out;
}

/// Full linear convolution, length a+b-1, computed via a padded FFT.
inline Eigen::VectorXd linear_convolve(const Eigen::VectorXd& a,
                                       const Eigen::VectorXd& b) {
  if (a.size() == 0 || b.size() == 0) return Eigen::VectorXd();
  const std::size_t full =
      static_cast<std::size_t>(a.size()) + static_cast<std::size_t>(b.size()) - 1;
  const std::size_t m = next_pow2(full);
  std::vector<cplx> fa(m, cplx(0.0, 0.0));
  std::vector<cplx> fb(m, cplx(0.0, 0.0));
  for (int i = 0; i < a.size(); ++i) fa[static_cast<std::size_t>(i)] = a[i];
  for (int i = 0; i < b.size(); ++i) fb[static_cast<std::size_t>(i)] = b[i];
  detail::transform_pow2(fa, false);
  detail::transform_pow2(fb, false);
  for (std::size_t i = 0; i < m; ++i) fa[i] *= fb[i];
  detail::transform_pow2(fa, true);
  Eigen::VectorXd out(static_cast<Eigen::Index>(full));
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < full; ++i)
    out[static_cast<Eigen::Index>(i)] = fa[i].real() * scale;
  return out;
}

}  // namespace hlc::fft
