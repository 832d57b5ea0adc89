// metrics.hpp: evaluation metrics for compensation strategies: long-term
// gain via Welch-averaged amplitude spectra, the segmented MAE family, the
// low-frequency penalty and composite loss, FMAE, SER, SPL calibration and
// deterministic test noise.
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

#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hlc/common.hpp"
#include "hlc/fft.hpp"
#include "hlc/gain_curve.hpp"
#include "hlc/window.hpp"

namespace hlc {

/// Digital SPL convention: an RMS of 1.0 (full scale) maps to 100 dB SPL.
inline constexpr double kFullScaleSplDb = 100.0;

inline constexpr double kSerCapDb = 300.0;

/// Input-estimate floor below which long-term-gain bins are marked invalid.
inline constexpr double kGainInputFloor = 1e-8;

struct SignalBuffer {
  Eigen::VectorXd samples;
  double sample_rate = 16000.0;  // Hz
  double spl_db = 0.0;           // calibration SPL (RMS convention)

  void validate() const {
    if (!(sample_rate > 0.0))
      throw input_error("signal: sample rate must be positive");
    for (int i = 0; i < samples.size(); ++i)
      if (!std::isfinite(samples[i]))
        throw input_error("signal: non-finite sample");
  }
};

inline double measure_spl(const SignalBuffer& buf,
                          double full_scale_db = kFullScaleSplDb) {
  buf.validate();
  if (buf.samples.size() == 0) throw input_error("measure_spl: empty signal");
  const double rms =
      std::sqrt(buf.samples.squaredNorm() / static_cast<double>(buf.samples.size()));
  if (rms <= 0.0) return -std::numeric_limits<double>::infinity();
  return full_scale_db + linear_to_db(rms);
}

inline SignalBuffer normalize_to_spl(const SignalBuffer& buf, double target_db,
                                     double full_scale_db = kFullScaleSplDb) {
  const double current = measure_spl(buf, full_scale_db);
  if (!std::isfinite(current))
    throw input_error("normalize_to_spl: zero-energy signal");
  SignalBuffer out = buf;
  out.samples *= db_to_linear(target_db - current);
  out.spl_db = target_db;
  return out;
}

struct WelchParams {
  int segment_len = 8192;
  double overlap = 0.5;        // fraction in [0, 1)
  std::string window = "hann";
  int nfft = 0;                // 0 means segment_len

  int effective_nfft() const { return nfft > 0 ? nfft : segment_len; }

  void validate(Eigen::Index signal_len) const {
    if (segment_len < 2) throw input_error("welch: segment too short");
    if (segment_len > signal_len)
      throw input_error("welch: signal shorter than one segment");
    if (!(overlap >= 0.0) || !(overlap < 1.0))
      throw input_error("welch: overlap must be in [0, 1)");
    if (effective_nfft() < segment_len)
      throw input_error("welch: nfft must be >= segment length");
  }
};

struct AmplitudeSpectrum {
  Eigen::VectorXd freqs;      // Hz, bins 0..nfft/2
  Eigen::VectorXd amplitude;  // averaged one-sided magnitude
  int segments = 0;
};

/// Welch-averaged one-sided amplitude spectrum, E[|X|] per bin. Scaled by the
/// coherent window gain so a unit-amplitude exact-bin tone reads ~0.5.
inline AmplitudeSpectrum welch_amplitude(const Eigen::VectorXd& x, double fs,
                                         const WelchParams& params) {
  params.validate(x.size());
  const int seg = params.segment_len;
  const int nfft = params.effective_nfft();
  const int hop = std::max(
      1, static_cast<int>(std::floor(seg * (1.0 - params.overlap))));
  const Eigen::VectorXd w = make_window(params.window, seg);
  const double scale = 1.0 / w.sum();
  const int half = nfft / 2;

  AmplitudeSpectrum out;
  out.amplitude = Eigen::VectorXd::Zero(half + 1);
  for (Eigen::Index start = 0; start + seg <= x.size(); start += hop) {
    const Eigen::VectorXd frame = x.segment(start, seg).cwiseProduct(w);
    const Eigen::VectorXcd spec = fft::forward_real(frame, nfft);
    for (int i = 0; i <= half; ++i) out.amplitude[i] += std::abs(spec[i]);
    ++out.segments;
  }
  out.amplitude *= scale / static_cast<double>(out.segments);
  out.freqs.resize(half + 1);
  for (int i = 0; i <= half; ++i)
    out.freqs[i] = static_cast<double>(i) * fs / nfft;
  return out;
}

/// Welch one-sided power spectral density (density scaling, Hann-style
/// window energy normalization).
inline AmplitudeSpectrum welch_psd(const Eigen::VectorXd& x, double fs,
                                   const WelchParams& params) {
  params.validate(x.size());
  const int seg = params.segment_len;
  const int nfft = params.effective_nfft();
  const int hop = std::max(
      1, static_cast<int>(std::floor(seg * (1.0 - params.overlap))));
  const Eigen::VectorXd w = make_window(params.window, seg);
  const double scale = 1.0 / (fs * w.squaredNorm());
  const int half = nfft / 2;

  AmplitudeSpectrum out;
  out.amplitude = Eigen::VectorXd::Zero(half + 1);
  for (Eigen::Index start = 0; start + seg <= x.size(); start += hop) {
    const Eigen::VectorXd frame = x.segment(start, seg).cwiseProduct(w);
    const Eigen::VectorXcd spec = fft::forward_real(frame, nfft);
    for (int i = 0; i <= half; ++i) {
      double p = std::norm(spec[i]) * scale;
      if (i != 0 && !(nfft % 2 == 0 && i == half)) p *= 2.0;
      out.amplitude[i] += p;
    }
    ++out.segments;
  }
  out.amplitude /= static_cast<double>(out.segments);
  out.freqs.resize(half + 1);
  for (int i = 0; i <= half; ++i)
    out.freqs[i] = static_cast<double>(i) * fs / nfft;
  return out;
}

struct LongTermGain {
  GainCurve curve;
  std::vector<std::uint8_t> valid;  // per bin; gain is 0 where invalid
  int segments = 0;
};

/// Long-term linear gain of a processing chain: the per-bin ratio of
/// Welch-averaged amplitude spectra of output and input. Bins whose input
/// estimate falls below kGainInputFloor times the maximum are marked invalid
/// instead of divided. Signals are trimmed to the common length.
inline LongTermGain long_term_gain(const SignalBuffer& input,
                                   const SignalBuffer& output,
                                   const WelchParams& params) {
  input.validate();
  output.validate();
  if (input.sample_rate != output.sample_rate)
    throw input_error("long_term_gain: sample rates differ");
  const Eigen::Index n = std::min(input.samples.size(), output.samples.size());
  const AmplitudeSpectrum in_spec =
      welch_amplitude(input.samples.head(n), input.sample_rate, params);
  const AmplitudeSpectrum out_spec =
      welch_amplitude(output.samples.head(n), output.sample_rate, params);

  LongTermGain result;
  result.segments = in_spec.segments;
  result.curve.freqs = in_spec.freqs;
  result.curve.gains = Eigen::VectorXd::Zero(in_spec.amplitude.size());
  result.valid.assign(static_cast<std::size_t>(in_spec.amplitude.size()), 0);
  const double floor = kGainInputFloor * in_spec.amplitude.maxCoeff();
  for (int i = 0; i < in_spec.amplitude.size(); ++i) {
    if (in_spec.amplitude[i] >= floor && in_spec.amplitude[i] > 0.0) {
      result.curve.gains[i] = out_spec.amplitude[i] / in_spec.amplitude[i];
      result.valid[static_cast<std::size_t>(i)] = 1;
    }
  }
  return result;
}

/// Auditory-model channel outputs: rows are channels, columns time samples.
struct ChannelResponseSet {
  Eigen::MatrixXd data;  // K x T
  std::vector<double> segment_lengths_ms = {1.0, 10.0, 100.0};

  void validate() const {
    if (data.rows() < 1 || data.cols() < 1)
      throw input_error("channel responses: empty");
    if (!data.allFinite())
      throw input_error("channel responses: non-finite entry");
  }
};

/// Mean absolute difference of segment-averaged channel responses:
///   (1/K) sum_k sum_seg |mean_seg(nh_k) - mean_seg(hi_k)| / n_segments.
/// A trailing partial segment is averaged over its actual length. With
/// 1-sample segments this is the plain mean absolute error.
inline double segmented_mae(const ChannelResponseSet& nh,
                            const ChannelResponseSet& hi, double segment_ms,
                            double sample_rate) {
  nh.validate();
  hi.validate();
  if (nh.data.rows() != hi.data.rows() || nh.data.cols() != hi.data.cols())
    throw input_error("segmented_mae: shape mismatch");
  if (!(sample_rate > 0.0) || !(segment_ms > 0.0))
    throw input_error("segmented_mae: nonpositive segment or rate");
  const Eigen::Index t_len = nh.data.cols();
  const Eigen::Index seg = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(segment_ms * sample_rate / 1000.0)));
  const Eigen::Index n_seg = (t_len + seg - 1) / seg;
  double total = 0.0;
  for (Eigen::Index k = 0; k < nh.data.rows(); ++k) {
    for (Eigen::Index s = 0; s < t_len; s += seg) {
      const Eigen::Index len = std::min(seg, t_len - s);
      const double mean_nh = nh.data.row(k).segment(s, len).mean();
      const double mean_hi = hi.data.row(k).segment(s, len).mean();
      total += std::abs(mean_nh - mean_hi);
    }
  }
  return total / (static_cast<double>(nh.data.rows()) *
                  static_cast<double>(n_seg));
}

/// Sum of absolute DFT differences over bins strictly below the cutoff
/// (positive-frequency bins only, DC included).
inline double low_freq_penalty(const SignalBuffer& x, const SignalBuffer& y,
                               double cutoff_hz = 20.0) {
  x.validate();
  y.validate();
  if (x.sample_rate != y.sample_rate)
    throw input_error("low_freq_penalty: sample rates differ");
  const Eigen::Index n = std::min(x.samples.size(), y.samples.size());
  if (n < 1) throw input_error("low_freq_penalty: empty signal");
  const Eigen::VectorXcd xf =
      fft::forward_real(x.samples.head(n), static_cast<int>(n));
  const Eigen::VectorXcd yf =
      fft::forward_real(y.samples.head(n), static_cast<int>(n));
  const Eigen::Index half = n / 2;
  double total = 0.0;
  for (Eigen::Index i = 0; i <= half; ++i) {
    const double freq =
        static_cast<double>(i) * x.sample_rate / static_cast<double>(n);
    if (freq < cutoff_hz) total += std::abs(xf[i] - yf[i]);
  }
  return total;
}

/// Composite training loss: segmented MAE at 1, 10 and 100 ms plus
/// gamma times the low-frequency penalty.
inline double composite_loss(const ChannelResponseSet& nh,
                             const ChannelResponseSet& hi,
                             const SignalBuffer& x, const SignalBuffer& y,
                             double gamma) {
  if (x.sample_rate != y.sample_rate)
    throw input_error("composite_loss: sample rates differ");
  const double fs = x.sample_rate;
  return segmented_mae(nh, hi, 1.0, fs) + segmented_mae(nh, hi, 10.0, fs) +
         segmented_mae(nh, hi, 100.0, fs) + gamma * low_freq_penalty(x, y);
}

/// Frequency- and level-dependent mean absolute error between a reference
/// model output and an emulator output:
///   (1/(T K)) sum_k || beta_k f_k - fbar_k ||_1 * alpha_{k,l}.
inline double fmae(const ChannelResponseSet& truth,
                   const ChannelResponseSet& emulated,
                   const Eigen::VectorXd& beta, const Eigen::MatrixXd& alpha,
                   int level_index) {
  truth.validate();
  emulated.validate();
  if (truth.data.rows() != emulated.data.rows() ||
      truth.data.cols() != emulated.data.cols())
    throw input_error("fmae: shape mismatch");
  const Eigen::Index k_count = truth.data.rows();
  if (beta.size() != k_count) throw input_error("fmae: beta length mismatch");
  if (alpha.rows() != k_count)
    throw input_error("fmae: alpha row count mismatch");
  if (level_index < 0 || level_index >= alpha.cols())
    throw input_error("fmae: level index out of range");
  for (Eigen::Index k = 0; k < k_count; ++k) {
    if (!(beta[k] > 0.0)) throw input_error("fmae: beta must be positive");
    if (alpha(k, level_index) < 0.0)
      throw input_error("fmae: alpha must be nonnegative");
  }
  double total = 0.0;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const double l1 =
        (beta[k] * truth.data.row(k) - emulated.data.row(k)).cwiseAbs().sum();
    total += l1 * alpha(k, level_index);
  }
  return total / (static_cast<double>(truth.data.cols()) *
                  static_cast<double>(k_count));
}

/// Undo the emulator's per-channel normalization, fhat_k = fbar_k / beta_k.
inline ChannelResponseSet denormalize_emulated(const ChannelResponseSet& emulated,
                                               const Eigen::VectorXd& beta) {
  emulated.validate();
  if (beta.size() != emulated.data.rows())
    throw input_error("denormalize: beta length mismatch");
  ChannelResponseSet out = emulated;
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    if (!(beta[k] > 0.0)) throw input_error("denormalize: beta must be positive");
    out.data.row(k) /= beta[k];
  }
  return out;
}

struct SerResult {
  Eigen::VectorXd db;               // per channel, capped at kSerCapDb
  std::vector<std::uint8_t> valid;  // zero-energy truth channels are invalid
};

/// Per-channel signal-to-error ratio, 10 log10(||t_k||^2 / ||t_k - e_k||^2).
inline SerResult ser(const ChannelResponseSet& truth,
                     const ChannelResponseSet& estimate) {
  truth.validate();
  estimate.validate();
  if (truth.data.rows() != estimate.data.rows() ||
      truth.data.cols() != estimate.data.cols())
    throw input_error("ser: shape mismatch");
  const Eigen::Index k_count = truth.data.rows();
  SerResult out;
  out.db = Eigen::VectorXd::Zero(k_count);
  out.valid.assign(static_cast<std::size_t>(k_count), 1);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const double sig = truth.data.row(k).squaredNorm();
    const double err = (truth.data.row(k) - estimate.data.row(k)).squaredNorm();
    if (sig <= 0.0) {
      out.valid[static_cast<std::size_t>(k)] = 0;
      out.db[k] = 0.0;
    } else if (err <= 0.0) {
      out.db[k] = kSerCapDb;
    } else {
      out.db[k] = std::min(10.0 * std::log10(sig / err), kSerCapDb);
    }
  }
  return out;
}

namespace detail {

// Box-Muller on explicit uniforms so the stream is identical across
// standard-library implementations.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

 private:
  double next_unit() {
    // (0, 1]: log() stays finite.
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace detail

/// Deterministic Gaussian test noise. "white" is unit-variance; for
/// "speech_shaped" the white noise is convolved with the supplied shaping
/// FIR (the library ships an LTASS-approximating filter as a data file).
inline SignalBuffer make_noise(const std::string& kind, double duration_s,
                               double sample_rate, std::uint64_t seed,
                               const Eigen::VectorXd* shaping_fir = nullptr) {
  if (!(duration_s > 0.0)) throw input_error("make_noise: duration must be > 0");
  if (!(sample_rate > 0.0))
    throw input_error("make_noise: sample rate must be > 0");
  const Eigen::Index n =
      static_cast<Eigen::Index>(std::llround(duration_s * sample_rate));
  if (n < 1) throw input_error("make_noise: zero-length request");
  detail::GaussianSource source(seed);
  Eigen::VectorXd samples(n);
  for (Eigen::Index i = 0; i < n; ++i) samples[i] = source.next();

  SignalBuffer buf;
  buf.sample_rate = sample_rate;
  if (kind == "white") {
    buf.samples = std::move(samples);
  } else if (kind == "speech_shaped") {
    if (shaping_fir == nullptr || shaping_fir->size() == 0)
      throw input_error("make_noise: speech_shaped requires a shaping FIR");
    buf.samples = fft::linear_convolve(samples, *shaping_fir).head(n);
  } else {
    throw input_error("make_noise: unknown kind '" + kind + "'");
  }
  buf.spl_db = measure_spl(buf);
  return buf;
}

}  // namespace hlc
