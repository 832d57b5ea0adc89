// compensation.hpp: MSE-optimal linear hearing-loss compensation. The
// frequency-domain route computes the closed-form per-bin gain from the
// sampled normal and impaired models; the time-domain route solves the
// stacked-Toeplitz least-squares problem for a finite FIR.
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

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hlc/common.hpp"
#include "hlc/fft.hpp"
#include "hlc/model.hpp"
#include "hlc/window.hpp"

namespace hlc {

/// Relative Tikhonov floor applied to the per-bin denominator.
inline constexpr double kGainDenominatorFloor = 1e-12;

/// Condition number beyond which the time-domain solve is flagged.
inline constexpr double kIllConditionThreshold = 1e10;

/// Complex per-bin compensation gain, conjugate-symmetric across the Nyquist
/// fold so that any derived FIR is real.
struct CompensationGain {
  Eigen::VectorXcd bins;
  int nfft = 0;
  std::optional<Eigen::VectorXd> derived_fir;
  bool ill_conditioned = false;

  void validate() const {
    if (bins.size() != nfft) throw input_error("compensation gain: bad size");
    for (int i = 0; i < bins.size(); ++i) {
      if (!std::isfinite(bins[i].real()) || !std::isfinite(bins[i].imag()))
        throw input_error("compensation gain: non-finite bin");
    }
  }
};

/// Linear-convolution operator of a zero-padded source vector: applying it
/// equals convolving with the source and truncating to the source length.
struct ToeplitzOperator {
  Eigen::VectorXd source;

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    const Eigen::Index n = source.size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      const Eigen::Index jmax = std::min<Eigen::Index>(i, v.size() - 1);
      for (Eigen::Index j = 0; j <= jmax; ++j) acc += source[i - j] * v[j];
      out[i] = acc;
    }
    return out;
  }

  /// Dense N x cols matrix whose j-th column is the source delayed by j.
  Eigen::MatrixXd materialize(Eigen::Index cols) const {
    const Eigen::Index n = source.size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = j; i < n; ++i) m(i, j) = source[i - j];
    return m;
  }
};

namespace detail {

inline void enforce_conjugate_symmetry(Eigen::VectorXcd& bins) {
  const int n = static_cast<int>(bins.size());
  bins[0] = std::complex<double>(bins[0].real(), 0.0);
  if (n % 2 == 0) bins[n / 2] = std::complex<double>(bins[n / 2].real(), 0.0);
  for (int i = 1; i < (n + 1) / 2; ++i) bins[n - i] = std::conj(bins[i]);
}

}  // namespace detail

/// Closed-form per-bin optimal gain from sampled model matrices (rows =
/// channels, columns = DFT bins):
///
///   bins[i] = sum_k conj(D_ki) N_ki / max(sum_k |D_ki|^2, eps)
///
/// with eps = eps_scale * max_i sum_k |D_ki|^2. An input power spectrum
/// weights numerator and denominator identically; for strictly positive
/// spectra it cancels per bin, which the tests assert. With eps_scale = 0 an
/// all-zero denominator column raises numeric_error.
inline CompensationGain optimal_gain_bins(
    const Eigen::MatrixXcd& normal, const Eigen::MatrixXcd& impaired,
    const Eigen::VectorXd* input_psd = nullptr,
    double eps_scale = kGainDenominatorFloor) {
  if (normal.rows() != impaired.rows() || normal.cols() != impaired.cols())
    throw input_error("optimal_gain: model shape mismatch");
  const int n = static_cast<int>(normal.cols());
  if (n < 2) throw input_error("optimal_gain: nfft must be >= 2");
  if (input_psd && input_psd->size() != n)
    throw input_error("optimal_gain: input PSD length mismatch");
  const int half = n / 2;

  Eigen::VectorXcd num = Eigen::VectorXcd::Zero(half + 1);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(half + 1);
  for (int i = 0; i <= half; ++i) {
    std::complex<double> acc(0.0, 0.0);
    double d2 = 0.0;
    for (int k = 0; k < normal.rows(); ++k) {
      acc += std::conj(impaired(k, i)) * normal(k, i);
      d2 += std::norm(impaired(k, i));
    }
    if (input_psd) {
      const double w = (*input_psd)[i];
      if (!(w >= 0.0) || !std::isfinite(w))
        throw input_error("optimal_gain: PSD must be finite and >= 0");
      acc *= w;
      d2 *= w;
    }
    num[i] = acc;
    den[i] = d2;
  }
  const double eps = eps_scale * den.maxCoeff();
  CompensationGain gain;
  gain.nfft = n;
  gain.bins.resize(n);
  for (int i = 0; i <= half; ++i) {
    if (den[i] <= 0.0 && eps <= 0.0)
      throw numeric_error("optimal_gain: singular bin " + std::to_string(i) +
                          " with zero regularization");
    gain.bins[i] = num[i] / std::max(den[i], eps);
  }
  detail::enforce_conjugate_symmetry(gain.bins);
  return gain;
}

/// Bank-level wrapper; both banks must share the DFT grid and channel count.
inline CompensationGain optimal_gain_freq(
    const Filterbank& normal, const Filterbank& impaired,
    const Eigen::VectorXd* input_psd = nullptr,
    double eps_scale = kGainDenominatorFloor) {
  if (normal.nfft() != impaired.nfft() ||
      normal.spec.sample_rate != impaired.spec.sample_rate)
    throw input_error("optimal_gain: banks on different grids");
  if (normal.num_channels() != impaired.num_channels())
    throw input_error("optimal_gain: banks have different channel counts");
  return optimal_gain_bins(normal.response, impaired.response, input_psd,
                           eps_scale);
}

/// Frobenius residual of the compensated model relative to the normal model,
/// || N - D diag(c) ||_F^2 / || N ||_F^2, for a flat input spectrum. In [0, 1]
/// when c is the optimal gain.
inline double restoration_residual(const Eigen::MatrixXcd& normal,
                                   const Eigen::MatrixXcd& impaired,
                                   const CompensationGain& gain) {
  if (normal.rows() != impaired.rows() || normal.cols() != impaired.cols())
    throw input_error("restoration_residual: model shape mismatch");
  if (gain.bins.size() != normal.cols())
    throw input_error("restoration_residual: gain length mismatch");
  double err = 0.0;
  double ref = 0.0;
  for (int i = 0; i < normal.cols(); ++i) {
    for (int k = 0; k < normal.rows(); ++k) {
      err += std::norm(normal(k, i) - impaired(k, i) * gain.bins[i]);
      ref += std::norm(normal(k, i));
    }
  }
  if (ref <= 0.0) throw input_error("restoration_residual: zero normal model");
  return err / ref;
}

inline double restoration_residual(const Filterbank& normal,
                                   const Filterbank& impaired,
                                   const CompensationGain& gain) {
  return restoration_residual(normal.response, impaired.response, gain);
}

/// Minimal-norm least-squares FIR of length filter_len matching the normal
/// model's channel outputs through the impaired model. Rows of the
/// impulse-response matrices are channels. With a probe signal the system is
/// weighted by it (the stacked-Toeplitz objective); with an empty probe the
/// probe-free stacked form is solved, equivalent to a unit-impulse probe.
///
/// All sequences live on a common padded length pad_len (0 picks the next
/// power of two >= L+T+M-2, which makes the periodic construction used here
/// coincide exactly with truncated linear convolution). The normal equations
/// are accumulated per channel from circular correlations and solved by
/// eigendecomposition, dropping the null space, so rank-deficient systems
/// yield the minimal-norm solution with `ill_conditioned` set.
inline CompensationGain optimal_filter_time(const Eigen::MatrixXd& normal_ir,
                                            const Eigen::MatrixXd& impaired_ir,
                                            const Eigen::VectorXd& probe,
                                            int filter_len, int pad_len = 0) {
  if (filter_len <= 0)
    throw input_error("optimal_filter_time: filter length must be positive");
  if (normal_ir.rows() != impaired_ir.rows() ||
      normal_ir.cols() != impaired_ir.cols())
    throw input_error("optimal_filter_time: impulse-response shape mismatch");
  if (normal_ir.rows() < 1 || normal_ir.cols() < 1)
    throw input_error("optimal_filter_time: empty impulse responses");
  const int k_count = static_cast<int>(normal_ir.rows());
  const int t_len = static_cast<int>(normal_ir.cols());
  const int probe_len = static_cast<int>(probe.size());
  const int min_pad = std::max(probe_len, 1) + t_len + filter_len - 2;
  int n = pad_len;
  if (n == 0) n = static_cast<int>(fft::next_pow2(static_cast<std::size_t>(min_pad)));
  if (n < t_len || n < filter_len || n < probe_len)
    throw input_error("optimal_filter_time: pad length too short");
  const int m = filter_len;

  Eigen::VectorXcd probe_spec;
  if (probe_len > 0) probe_spec = fft::forward_real(probe, n);

  Eigen::VectorXcd rho_spec = Eigen::VectorXcd::Zero(n);
  Eigen::VectorXcd cross_spec = Eigen::VectorXcd::Zero(n);
  for (int k = 0; k < k_count; ++k) {
    Eigen::VectorXcd s_spec =
        fft::forward_real(impaired_ir.row(k).transpose(), n);
    Eigen::VectorXcd t_spec = fft::forward_real(normal_ir.row(k).transpose(), n);
    if (probe_len > 0) {
      s_spec = s_spec.cwiseProduct(probe_spec);
      t_spec = t_spec.cwiseProduct(probe_spec);
    }
    rho_spec += s_spec.cwiseAbs2().cast<std::complex<double>>();
    cross_spec += t_spec.cwiseProduct(s_spec.conjugate());
  }
  std::vector<fft::cplx> buf(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = rho_spec[i];
  buf = fft::inverse(std::move(buf));
  Eigen::VectorXd rho(m);
  for (int i = 0; i < m; ++i) rho[i] = buf[static_cast<std::size_t>(i)].real();
  for (int i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = cross_spec[i];
  buf = fft::inverse(std::move(buf));
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) rhs[i] = buf[static_cast<std::size_t>(i)].real();

  Eigen::MatrixXd gram(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) gram(i, j) = rho[std::abs(i - j)];

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success)
    throw numeric_error("optimal_filter_time: eigendecomposition failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lambda_max = lambda[m - 1];
  const double cutoff = lambda_max * 1e-12;
  CompensationGain gain;
  gain.ill_conditioned =
      lambda_max <= 0.0 || lambda[0] < lambda_max / kIllConditionThreshold;
  Eigen::VectorXd coeffs = eig.eigenvectors().transpose() * rhs;
  for (int i = 0; i < m; ++i)
    coeffs[i] = (lambda[i] > cutoff && cutoff > 0.0) ? coeffs[i] / lambda[i] : 0.0;
  Eigen::VectorXd fir = eig.eigenvectors() * coeffs;

  gain.nfft = n;
  gain.bins = fft::forward_real(fir, n);
  detail::enforce_conjugate_symmetry(gain.bins);
  gain.derived_fir = std::move(fir);
  return gain;
}

/// Linear-phase FIR realization of a gain curve by frequency sampling: the
/// zero-phase inverse DFT of |bins| is rotated to causal alignment and
/// truncated to `taps` under the named window. Phase information in `bins`
/// is discarded.
inline Eigen::VectorXd fir_from_gain(const CompensationGain& gain, int taps,
                                     const std::string& window = "hann") {
  gain.validate();
  if (taps < 1) throw input_error("fir_from_gain: taps must be >= 1");
  if (taps > gain.nfft)
    throw input_error("fir_from_gain: taps exceed the gain's DFT length");
  const int n = gain.nfft;
  Eigen::VectorXcd mag(n);
  for (int i = 0; i < n; ++i) mag[i] = std::abs(gain.bins[i]);
  const Eigen::VectorXd proto = fft::inverse_real(mag);
  const Eigen::VectorXd w = make_window(window, taps);
  const int delay = taps / 2;
  Eigen::VectorXd fir(taps);
  for (int i = 0; i < taps; ++i) {
    const int src = ((i - delay) % n + n) % n;
    fir[i] = proto[src] * w[i];
  }
  return fir;
}

}  // namespace hlc
