// model.hpp: linear auditory models built from parametric gammatone
// filterbanks sampled on a DFT frequency grid, plus audiograms and
// hearing-loss profiles that impair them.
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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hlc/common.hpp"
#include "hlc/fft.hpp"

namespace hlc {

/// Quality factors below this are clamped; a filter with q = 0 would have
/// infinite bandwidth.
inline constexpr double kMinNormalQ = 0.5;

/// One gammatone channel. The analytic frequency response is
///   gain * [ (1 + j(f-cf)/b)^-order + (1 + j(f+cf)/b)^-order ],  b = cf/q.
struct GammatoneParams {
  double cf = 1000.0;  // center frequency, Hz
  int order = 1;       // filter order, >= 1
  double q = 4.0;      // quality factor, cf / bandwidth
  double gain = 1.0;   // linear scalar

  void validate() const {
    if (!(cf > 0.0) || !std::isfinite(cf))
      throw input_error("gammatone: cf must be positive and finite");
    if (order < 1) throw input_error("gammatone: order must be >= 1");
    if (!(q > 0.0) || !std::isfinite(q))
      throw input_error("gammatone: q must be positive and finite");
    if (!(gain >= 0.0) || !std::isfinite(gain))
      throw input_error("gammatone: gain must be nonnegative and finite");
  }
};

namespace detail {

// z^-n for integer n >= 1 without pow() branch-cut concerns.
inline std::complex<double> inv_int_pow(std::complex<double> z, int n) {
  std::complex<double> p = z;
  for (int k = 1; k < n; ++k) p *= z;
  return 1.0 / p;
}

}  // namespace detail

/// One-sided gammatone factor (1 + j(f-cf)/b)^-order, scaled by the gain.
/// For constant bandwidth this factor is exactly conjugate-symmetric under
/// swapping f and cf.
inline std::complex<double> gammatone_onesided_at(const GammatoneParams& p,
                                                  double freq_hz) {
  const double b = p.cf / p.q;
  const std::complex<double> w(1.0, (freq_hz - p.cf) / b);
  return p.gain * detail::inv_int_pow(w, p.order);
}

/// Conjugate-frequency image term (1 + j(f+cf)/b)^-order, scaled by the
/// gain. Symmetric (not conjugate-symmetric) under swapping f and cf.
inline std::complex<double> gammatone_image_at(const GammatoneParams& p,
                                               double freq_hz) {
  const double b = p.cf / p.q;
  const std::complex<double> w(1.0, (freq_hz + p.cf) / b);
  return p.gain * detail::inv_int_pow(w, p.order);
}

/// Analytic two-term gammatone response at a single frequency: the one-sided
/// factor plus its conjugate-frequency image, which makes sampled impulse
/// responses real.
inline std::complex<double> gammatone_response_at(const GammatoneParams& p,
                                                  double freq_hz) {
  return gammatone_onesided_at(p, freq_hz) + gammatone_image_at(p, freq_hz);
}

/// Vectorized gammatone response. Rejects non-finite frequencies.
inline Eigen::VectorXcd gammatone_response(const GammatoneParams& p,
                                           const Eigen::VectorXd& freqs_hz) {
  p.validate();
  Eigen::VectorXcd out(freqs_hz.size());
  for (int i = 0; i < freqs_hz.size(); ++i) {
    if (!std::isfinite(freqs_hz[i]))
      throw input_error("gammatone_response: non-finite frequency");
    out[i] = gammatone_response_at(p, freqs_hz[i]);
  }
  return out;
}

/// Normal-hearing Q profile: linear in log-frequency between
/// (cf_lo, q_lo) and (cf_hi, q_hi), clamped to kMinNormalQ.
inline double normal_q_profile(double cf, double cf_lo, double cf_hi,
                               double q_lo, double q_hi) {
  double q = q_lo;
  if (cf_hi > cf_lo) {
    const double t = std::log(cf / cf_lo) / std::log(cf_hi / cf_lo);
    q = q_lo + (q_hi - q_lo) * std::clamp(t, 0.0, 1.0);
  }
  return std::max(q, kMinNormalQ);
}

/// Parametric description of a filterbank: ordered channels plus the DFT
/// grid the sampled model lives on.
struct FilterbankSpec {
  std::vector<GammatoneParams> channels;
  double sample_rate = 32000.0;  // Hz
  int nfft = 4096;

  void validate() const {
    if (channels.empty()) throw input_error("filterbank: needs >= 1 channel");
    if (nfft < 2) throw input_error("filterbank: nfft must be >= 2");
    if (!(sample_rate > 0.0))
      throw input_error("filterbank: sample rate must be positive");
    double prev = 0.0;
    for (const auto& ch : channels) {
      ch.validate();
      if (ch.cf <= prev)
        throw input_error("filterbank: cf values must be strictly increasing");
      if (ch.cf >= sample_rate / 2.0)
        throw config_error("filterbank: cf at or above Nyquist");
      prev = ch.cf;
    }
  }

  Eigen::VectorXd cf_vector() const {
    Eigen::VectorXd cfs(static_cast<Eigen::Index>(channels.size()));
    for (std::size_t k = 0; k < channels.size(); ++k)
      cfs[static_cast<Eigen::Index>(k)] = channels[k].cf;
    return cfs;
  }
};

/// Signed DFT bin frequencies: index i maps to i*fs/nfft for i <= nfft/2 and
/// to (i-nfft)*fs/nfft above, so a real impulse response sees conjugate
/// frequency pairs at mirrored bins.
inline Eigen::VectorXd signed_bin_frequencies(int nfft, double sample_rate) {
  Eigen::VectorXd f(nfft);
  const int half = nfft / 2;
  for (int i = 0; i < nfft; ++i) {
    const int idx = (i <= half) ? i : i - nfft;
    f[i] = static_cast<double>(idx) * sample_rate / static_cast<double>(nfft);
  }
  return f;
}

/// A gammatone filterbank sampled on the DFT grid. Rows of `response` are
/// channels; each row is conjugate-symmetric across the Nyquist fold, so its
/// inverse DFT is a real impulse response. Immutable after construction.
struct Filterbank {
  FilterbankSpec spec;
  Eigen::MatrixXcd response;  // K x nfft
  Eigen::VectorXd freq_grid;  // signed bin frequencies, Hz

  int num_channels() const { return static_cast<int>(response.rows()); }
  int nfft() const { return spec.nfft; }

  /// Real impulse response of channel k (inverse DFT of the row).
  Eigen::VectorXd impulse_response(int k) const {
    return fft::inverse_real(response.row(k).transpose());
  }
};

/// Channel response at the nonnegative DFT bins 0..nfft/2. The
/// self-conjugate Nyquist bin (even nfft) takes the real part, which equals
/// the average of the +fs/2 and -fs/2 evaluations.
inline Eigen::VectorXcd sample_response_half(const GammatoneParams& p,
                                             int nfft, double sample_rate) {
  const int half = nfft / 2;
  Eigen::VectorXcd row(half + 1);
  for (int i = 0; i <= half; ++i) {
    const double f = static_cast<double>(i) * sample_rate / nfft;
    row[i] = gammatone_response_at(p, f);
  }
  if (nfft % 2 == 0) row[half] = std::complex<double>(row[half].real(), 0.0);
  return row;
}

/// Sample every channel's analytic response on the DFT grid. The upper half
/// of each row is mirrored from the lower half, so conjugate symmetry is
/// exact by construction.
inline Filterbank build_filterbank(const FilterbankSpec& spec) {
  spec.validate();
  const int n = spec.nfft;
  const int half = n / 2;
  const int k_count = static_cast<int>(spec.channels.size());
  Filterbank fb;
  fb.spec = spec;
  fb.freq_grid = signed_bin_frequencies(n, spec.sample_rate);
  fb.response.resize(k_count, n);
  for (int k = 0; k < k_count; ++k) {
    const Eigen::VectorXcd row = sample_response_half(
        spec.channels[static_cast<std::size_t>(k)], n, spec.sample_rate);
    for (int i = 0; i <= half; ++i) fb.response(k, i) = row[i];
    for (int i = half + 1; i < n; ++i)
      fb.response(k, i) = std::conj(fb.response(k, n - i));
  }
  return fb;
}

/// Pure-tone audiogram: hearing level (dB HL) at strictly increasing
/// frequencies. Interpolation is linear in (log f, dB HL) with flat
/// extrapolation beyond the endpoints.
struct AudiogramPoint {
  double freq_hz = 0.0;
  double hl_db = 0.0;
};

struct Audiogram {
  std::vector<AudiogramPoint> points;

  void validate() const {
    if (points.size() < 2) throw input_error("audiogram: needs >= 2 points");
    double prev = 0.0;
    for (const auto& pt : points) {
      if (!(pt.freq_hz > 0.0))
        throw input_error("audiogram: frequencies must be positive");
      if (pt.freq_hz <= prev)
        throw input_error("audiogram: frequencies must be strictly increasing");
      if (!std::isfinite(pt.hl_db))
        throw input_error("audiogram: non-finite hearing level");
      prev = pt.freq_hz;
    }
  }

  double min_freq() const { return points.front().freq_hz; }
  double max_freq() const { return points.back().freq_hz; }

  double hl_at(double freq_hz) const {
    if (points.empty()) throw input_error("audiogram: empty");
    if (freq_hz <= points.front().freq_hz) return points.front().hl_db;
    if (freq_hz >= points.back().freq_hz) return points.back().hl_db;
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (freq_hz <= points[i].freq_hz) {
        const auto& lo = points[i - 1];
        const auto& hi = points[i];
        const double t = std::log(freq_hz / lo.freq_hz) /
                         std::log(hi.freq_hz / lo.freq_hz);
        return lo.hl_db + t * (hi.hl_db - lo.hl_db);
      }
    }
    return points.back().hl_db;
  }
};

/// Per-channel hearing loss sampled at the model CFs, plus the broadening
/// equation's normalization constant and variant switch.
struct HearingLossProfile {
  Eigen::VectorXd per_cf_hl;  // dB HL, one entry per channel
  double hl_max = 105.0;      // dB
  // With plus_one the broadening is max(q*(1 - hl/hl_max) + 1, 1) as printed;
  // without it, max(q*(1 - hl/hl_max), 1), making zero loss an identity for
  // channels with q >= 1.
  bool plus_one = true;

  void validate() const {
    if (per_cf_hl.size() == 0) throw input_error("loss profile: empty");
    if (!(hl_max > 0.0)) throw input_error("loss profile: hl_max must be > 0");
    for (int k = 0; k < per_cf_hl.size(); ++k) {
      if (!std::isfinite(per_cf_hl[k]) || per_cf_hl[k] < 0.0)
        throw input_error("loss profile: HL must be finite and >= 0");
      if (per_cf_hl[k] > hl_max)
        throw input_error("loss profile: HL exceeds hl_max");
    }
  }

  /// Broadened Q at every channel, given the normal-hearing Q values.
  Eigen::VectorXd q_impaired(const Eigen::VectorXd& q_normal) const;
};

/// Impaired quality factor. Nonincreasing in hl and never below 1.
inline double impaired_q(double q_normal, double hl_db, double hl_max,
                         bool plus_one) {
  const double scaled = q_normal * (1.0 - hl_db / hl_max);
  return std::max(scaled + (plus_one ? 1.0 : 0.0), 1.0);
}

inline Eigen::VectorXd HearingLossProfile::q_impaired(
    const Eigen::VectorXd& q_normal) const {
  validate();
  if (q_normal.size() != per_cf_hl.size())
    throw input_error("loss profile: Q vector length mismatch");
  Eigen::VectorXd out(q_normal.size());
  for (int k = 0; k < q_normal.size(); ++k)
    out[k] = impaired_q(q_normal[k], per_cf_hl[k], hl_max, plus_one);
  return out;
}

/// Apply a hearing-loss profile: channel gains are scaled by 10^(-HL/20) and
/// channel Qs are replaced by the broadened values; the response matrix is
/// rebuilt from the modified parameters.
inline Filterbank impair_filterbank(const Filterbank& bank,
                                    const HearingLossProfile& profile) {
  profile.validate();
  if (profile.per_cf_hl.size() != bank.num_channels())
    throw input_error("impair_filterbank: profile/bank channel count mismatch");
  FilterbankSpec spec = bank.spec;
  for (int k = 0; k < profile.per_cf_hl.size(); ++k) {
    const double hl = profile.per_cf_hl[k];
    auto& ch = spec.channels[static_cast<std::size_t>(k)];
    ch.gain *= db_to_linear(-hl);
    ch.q = impaired_q(ch.q, hl, profile.hl_max, profile.plus_one);
  }
  return build_filterbank(spec);
}

/// Channel recipe for building filterbanks over arbitrary CF lists: the Q
/// profile runs linearly in log-frequency from q_min at cf_min to q_max at
/// cf_max (clamped to kMinNormalQ), all channels share the order, and the
/// sampled model lives on the given DFT grid.
struct ModelTemplate {
  double cf_min = 100.0;
  double cf_max = 10000.0;
  double q_min = 0.0;
  double q_max = 10.0;
  int order = 1;
  double sample_rate = 32000.0;
  int nfft = 4096;

  double q_at(double cf) const {
    return normal_q_profile(cf, cf_min, cf_max, q_min, q_max);
  }

  GammatoneParams channel_at(double cf) const {
    GammatoneParams p;
    p.cf = cf;
    p.order = order;
    p.q = q_at(cf);
    p.gain = 1.0;
    return p;
  }

  FilterbankSpec make_spec(const Eigen::VectorXd& cfs) const {
    FilterbankSpec spec;
    spec.sample_rate = sample_rate;
    spec.nfft = nfft;
    spec.channels.reserve(static_cast<std::size_t>(cfs.size()));
    for (int k = 0; k < cfs.size(); ++k)
      spec.channels.push_back(channel_at(cfs[k]));
    return spec;
  }
};

/// Sample an audiogram at the model CFs. Optionally smooth across CFs with a
/// 3-point moving average (endpoints replicated). Negative hearing levels
/// (better than normal) are treated as zero loss; levels above hl_max are
/// rejected rather than clamped.
inline HearingLossProfile audiogram_to_profile(const Audiogram& a,
                                               const Eigen::VectorXd& cfs,
                                               double hl_max, bool smooth) {
  a.validate();
  if (cfs.size() == 0) throw input_error("audiogram_to_profile: no CFs");
  Eigen::VectorXd hl(cfs.size());
  for (int k = 0; k < cfs.size(); ++k) hl[k] = std::max(a.hl_at(cfs[k]), 0.0);
  if (smooth && hl.size() > 1) {
    Eigen::VectorXd sm(hl.size());
    for (int k = 0; k < hl.size(); ++k) {
      const double lo = hl[std::max<int>(k - 1, 0)];
      const double hi = hl[std::min<int>(k + 1, static_cast<int>(hl.size()) - 1)];
      sm[k] = (lo + hl[k] + hi) / 3.0;
    }
    hl = sm;
  }
  HearingLossProfile profile;
  profile.per_cf_hl = hl;
  profile.hl_max = hl_max;
  profile.validate();
  return profile;
}

}  // namespace hlc
