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

#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "hlc/io.hpp"
#include "hlc/metrics.hpp"

namespace {

hlc::ChannelResponseSet random_responses(int k, int t, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  hlc::ChannelResponseSet set;
  set.data.resize(k, t);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < t; ++c) set.data(r, c) = dist(rng);
  return set;
}

hlc::SignalBuffer buffer_from(std::initializer_list<double> values, double fs) {
  hlc::SignalBuffer buf;
  buf.sample_rate = fs;
  buf.samples.resize(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) buf.samples[i++] = v;
  return buf;
}

}  // namespace

TEST_CASE("SPL calibration round-trips") {
  hlc::SignalBuffer buf = hlc::make_noise("white", 0.25, 16000.0, 5);
  const hlc::SignalBuffer calibrated = hlc::normalize_to_spl(buf, 65.0);
  CHECK(std::abs(hlc::measure_spl(calibrated) - 65.0) <= 1e-9);
  CHECK(calibrated.spl_db == 65.0);
  hlc::SignalBuffer silent;
  silent.samples = Eigen::VectorXd::Zero(64);
  CHECK_THROWS_AS(hlc::normalize_to_spl(silent, 65.0), hlc::input_error);
}

TEST_CASE("long-term gain of the identity and of a doubling") {
  const hlc::SignalBuffer x = hlc::make_noise("white", 2.0, 16000.0, 11);
  hlc::WelchParams params;
  params.segment_len = 1024;
  const hlc::LongTermGain identity = hlc::long_term_gain(x, x, params);
  hlc::SignalBuffer doubled = x;
  doubled.samples *= 2.0;
  const hlc::LongTermGain twice = hlc::long_term_gain(x, doubled, params);
  for (int i = 0; i < identity.curve.gains.size(); ++i) {
    if (!identity.valid[static_cast<std::size_t>(i)]) continue;
    CHECK(identity.curve.gains[i] == 1.0);
    CHECK(twice.curve.gains[i] == 2.0);
  }
}

TEST_CASE("long-term gain recovers a known FIR response") {
  const double fs = 16000.0;
  const hlc::SignalBuffer x = hlc::make_noise("white", 20.0, fs, 21);
  Eigen::VectorXd fir(64);
  for (int i = 0; i < 64; ++i) fir[i] = std::pow(0.9, i);
  fir /= fir.sum();
  hlc::SignalBuffer y;
  y.sample_rate = fs;
  y.samples = hlc::fft::linear_convolve(x.samples, fir).head(x.samples.size());

  hlc::WelchParams params;
  params.segment_len = 8192;
  const hlc::LongTermGain gain = hlc::long_term_gain(x, y, params);
  const Eigen::VectorXcd h = hlc::fft::forward_real(fir, 8192);
  for (int i = 0; i < gain.curve.freqs.size(); ++i) {
    const double f = gain.curve.freqs[i];
    if (f < 100.0 || f > 0.9 * fs / 2.0) continue;
    REQUIRE(gain.valid[static_cast<std::size_t>(i)]);
    const double got_db = hlc::linear_to_db(gain.curve.gains[i]);
    const double want_db = hlc::linear_to_db(std::abs(h[i]));
    CHECK(std::abs(got_db - want_db) <= 0.5);
  }
}

TEST_CASE("cascade gain equals the product of stage gains") {
  const double fs = 16000.0;
  const hlc::SignalBuffer x = hlc::make_noise("white", 30.0, fs, 31);
  Eigen::VectorXd h1(32);
  Eigen::VectorXd h2(16);
  for (int i = 0; i < 32; ++i) h1[i] = std::pow(0.8, i);
  for (int i = 0; i < 16; ++i) h2[i] = std::pow(0.7, i) * (i % 2 == 0 ? 1.0 : 0.5);
  h1 /= h1.sum();
  h2 /= h2.sum();
  hlc::SignalBuffer y1;
  y1.sample_rate = fs;
  y1.samples = hlc::fft::linear_convolve(x.samples, h1).head(x.samples.size());
  hlc::SignalBuffer y2;
  y2.sample_rate = fs;
  y2.samples = hlc::fft::linear_convolve(y1.samples, h2).head(x.samples.size());

  hlc::WelchParams params;
  params.segment_len = 4096;
  const hlc::LongTermGain direct = hlc::long_term_gain(x, y2, params);
  const hlc::LongTermGain stage1 = hlc::long_term_gain(x, y1, params);
  const hlc::LongTermGain stage2 = hlc::long_term_gain(y1, y2, params);
  const Eigen::VectorXcd h1f = hlc::fft::forward_real(h1, 4096);
  const Eigen::VectorXcd h2f = hlc::fft::forward_real(h2, 4096);
  for (int i = 0; i < direct.curve.gains.size(); ++i) {
    const double f = direct.curve.freqs[i];
    if (f < 100.0 || f > 0.9 * fs / 2.0) continue;
    const double product = stage1.curve.gains[i] * stage2.curve.gains[i];
    CHECK(std::abs(hlc::linear_to_db(direct.curve.gains[i]) -
                   hlc::linear_to_db(product)) <= 0.5);
    const double analytic = std::abs(h1f[i]) * std::abs(h2f[i]);
    CHECK(std::abs(hlc::linear_to_db(direct.curve.gains[i]) -
                   hlc::linear_to_db(analytic)) <= 0.5);
  }
}

TEST_CASE("long-term gain input validation") {
  const hlc::SignalBuffer x = hlc::make_noise("white", 0.1, 16000.0, 41);
  hlc::SignalBuffer other = x;
  other.sample_rate = 8000.0;
  hlc::WelchParams params;
  params.segment_len = 512;
  CHECK_THROWS_AS(hlc::long_term_gain(x, other, params), hlc::input_error);
  params.segment_len = 1 << 20;
  other.sample_rate = 16000.0;
  CHECK_THROWS_AS(hlc::long_term_gain(x, other, params), hlc::input_error);
}

TEST_CASE("segmented MAE examples") {
  hlc::ChannelResponseSet nh;
  nh.data.resize(1, 4);
  nh.data << 1.0, 2.0, 3.0, 4.0;
  hlc::ChannelResponseSet hi;
  hi.data.resize(1, 4);
  hi.data << 2.0, 2.0, 4.0, 4.0;

  CHECK(hlc::segmented_mae(nh, nh, 1.0, 1000.0) == 0.0);

  // Two 2-sample segments: |1.5-2| + |3.5-4| over 2 segments.
  CHECK(hlc::segmented_mae(nh, hi, 2.0, 1000.0) == Catch::Approx(0.5));

  // A constant offset survives any segmentation.
  hlc::ChannelResponseSet shifted = nh;
  shifted.data.array() += 0.37;
  for (double ms : {1.0, 2.0, 3.0, 4.0})
    CHECK(hlc::segmented_mae(nh, shifted, ms, 1000.0) ==
          Catch::Approx(0.37).epsilon(1e-12));

  hlc::ChannelResponseSet wrong = random_responses(2, 4, 3);
  CHECK_THROWS_AS(hlc::segmented_mae(nh, wrong, 1.0, 1000.0), hlc::input_error);
}

TEST_CASE("1-sample segments reduce to the plain mean absolute error") {
  const auto nh = random_responses(3, 17, 51);
  const auto hi = random_responses(3, 17, 52);
  const double got = hlc::segmented_mae(nh, hi, 1.0, 1000.0);
  const double want = (nh.data - hi.data).cwiseAbs().mean();
  CHECK(got == Catch::Approx(want).epsilon(1e-14));
}

TEST_CASE("segmented MAE is invariant under a shared channel permutation") {
  const auto nh = random_responses(4, 25, 61);
  const auto hi = random_responses(4, 25, 62);
  std::vector<int> perm = {2, 0, 3, 1};
  hlc::ChannelResponseSet nh_p = nh;
  hlc::ChannelResponseSet hi_p = hi;
  for (int r = 0; r < 4; ++r) {
    nh_p.data.row(r) = nh.data.row(perm[static_cast<std::size_t>(r)]);
    hi_p.data.row(r) = hi.data.row(perm[static_cast<std::size_t>(r)]);
  }
  for (double ms : {1.0, 5.0, 12.0})
    CHECK(hlc::segmented_mae(nh_p, hi_p, ms, 1000.0) ==
          Catch::Approx(hlc::segmented_mae(nh, hi, ms, 1000.0)).epsilon(1e-14));
}

TEST_CASE("segmented MAE satisfies the triangle inequality") {
  std::mt19937 rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_responses(2, 13, 100 + trial);
    const auto b = random_responses(2, 13, 200 + trial);
    const auto c = random_responses(2, 13, 300 + trial);
    std::uniform_real_distribution<double> ms_dist(1.0, 13.0);
    const double ms = ms_dist(rng);
    const double ab = hlc::segmented_mae(a, b, ms, 1000.0);
    const double bc = hlc::segmented_mae(b, c, ms, 1000.0);
    const double ac = hlc::segmented_mae(a, c, ms, 1000.0);
    CHECK(ac <= ab + bc + 1e-12);
  }
}

TEST_CASE("low-frequency penalty counts only sub-cutoff bins") {
  const double fs = 1000.0;
  const int n = 1000;
  hlc::SignalBuffer x;
  x.sample_rate = fs;
  x.samples = Eigen::VectorXd::Zero(n);
  CHECK(hlc::low_freq_penalty(x, x) == 0.0);

  // Unit tone at an exact bin above the cutoff: no penalty.
  hlc::SignalBuffer above = x;
  for (int i = 0; i < n; ++i)
    above.samples[i] = std::cos(2.0 * hlc::kPi * 50.0 * i / fs);
  CHECK(hlc::low_freq_penalty(x, above) <= 1e-9);

  // Unit tone at 10 Hz (exact bin): the counted positive bin holds N/2.
  hlc::SignalBuffer below = x;
  for (int i = 0; i < n; ++i)
    below.samples[i] = std::cos(2.0 * hlc::kPi * 10.0 * i / fs);
  CHECK(hlc::low_freq_penalty(x, below) ==
        Catch::Approx(n / 2.0).epsilon(1e-9));
}

TEST_CASE("composite loss composes its parts") {
  const auto nh = random_responses(3, 160, 81);
  const auto hi = random_responses(3, 160, 82);
  const hlc::SignalBuffer x = hlc::make_noise("white", 0.01, 16000.0, 83);
  const hlc::SignalBuffer y = hlc::make_noise("white", 0.01, 16000.0, 84);
  const double fs = 16000.0;

  CHECK(hlc::composite_loss(nh, nh, x, x, 0.7) == 0.0);

  const double mae_sum = hlc::segmented_mae(nh, hi, 1.0, fs) +
                         hlc::segmented_mae(nh, hi, 10.0, fs) +
                         hlc::segmented_mae(nh, hi, 100.0, fs);
  CHECK(hlc::composite_loss(nh, hi, x, y, 0.0) == Catch::Approx(mae_sum));
  const double expect = mae_sum + 0.25 * hlc::low_freq_penalty(x, y);
  CHECK(hlc::composite_loss(nh, hi, x, y, 0.25) ==
        Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("FMAE: unit weights, exact scaling, and a hand-computed case") {
  const auto truth = random_responses(3, 9, 91);
  const auto emulated = random_responses(3, 9, 92);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  const Eigen::MatrixXd alpha_ones = Eigen::MatrixXd::Ones(3, 1);
  const double got = hlc::fmae(truth, emulated, ones, alpha_ones, 0);
  CHECK(got ==
        Catch::Approx((truth.data - emulated.data).cwiseAbs().mean())
            .epsilon(1e-14));

  // Emulated = beta-scaled truth: zero error for any alpha.
  Eigen::VectorXd beta(3);
  beta << 0.5, 2.0, 3.0;
  hlc::ChannelResponseSet scaled = truth;
  for (int r = 0; r < 3; ++r) scaled.data.row(r) *= beta[r];
  CHECK(hlc::fmae(truth, scaled, beta, alpha_ones, 0) == 0.0);

  // K = 2, T = 2 by hand.
  hlc::ChannelResponseSet t2;
  t2.data.resize(2, 2);
  t2.data << 1.0, 2.0, 3.0, 4.0;
  hlc::ChannelResponseSet e2;
  e2.data.resize(2, 2);
  e2.data << 0.0, 1.0, 5.0, 9.0;
  Eigen::VectorXd beta2(2);
  beta2 << 1.0, 2.0;
  Eigen::MatrixXd alpha2(2, 1);
  alpha2 << 0.5, 1.0;
  // row 0: (|1-0| + |2-1|) * 0.5 = 1; row 1: (|6-5| + |8-9|) * 1 = 2.
  CHECK(hlc::fmae(t2, e2, beta2, alpha2, 0) == Catch::Approx(3.0 / 4.0));

  Eigen::VectorXd bad_beta(3);
  bad_beta << 1.0, 0.0, 1.0;
  CHECK_THROWS_AS(hlc::fmae(truth, emulated, bad_beta, alpha_ones, 0),
                  hlc::input_error);

  const hlc::ChannelResponseSet denorm = hlc::denormalize_emulated(scaled, beta);
  CHECK((denorm.data - truth.data).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("SER examples") {
  const auto truth = random_responses(4, 50, 95);
  const hlc::SerResult capped = hlc::ser(truth, truth);
  for (int k = 0; k < 4; ++k) CHECK(capped.db[k] == hlc::kSerCapDb);

  hlc::ChannelResponseSet zero = truth;
  zero.data.setZero();
  const hlc::SerResult zero_db = hlc::ser(truth, zero);
  for (int k = 0; k < 4; ++k) CHECK(zero_db.db[k] == Catch::Approx(0.0).margin(1e-12));

  // Noise at exactly -20 dB relative energy per channel.
  hlc::ChannelResponseSet noisy = truth;
  std::mt19937 rng(96);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int k = 0; k < 4; ++k) {
    Eigen::VectorXd noise(50);
    for (int i = 0; i < 50; ++i) noise[i] = dist(rng);
    noise *= std::sqrt(0.01 * truth.data.row(k).squaredNorm() /
                       noise.squaredNorm());
    noisy.data.row(k) += noise.transpose();
  }
  const hlc::SerResult snr20 = hlc::ser(truth, noisy);
  for (int k = 0; k < 4; ++k) CHECK(snr20.db[k] == Catch::Approx(20.0).margin(0.1));

  // Zero-energy truth channels are marked invalid, not errors.
  hlc::ChannelResponseSet silent = truth;
  silent.data.row(1).setZero();
  const hlc::SerResult invalid = hlc::ser(silent, truth);
  CHECK(invalid.valid[1] == 0);
  CHECK(invalid.valid[0] == 1);
}

TEST_CASE("noise generation is deterministic and spectrally correct") {
  const hlc::SignalBuffer a = hlc::make_noise("white", 1.0, 16000.0, 1234);
  const hlc::SignalBuffer b = hlc::make_noise("white", 1.0, 16000.0, 1234);
  REQUIRE(a.samples.size() == b.samples.size());
  CHECK(a.samples == b.samples);  // bit-identical
  CHECK_THROWS_AS(hlc::make_noise("pink", 1.0, 16000.0, 1), hlc::input_error);
  CHECK_THROWS_AS(hlc::make_noise("speech_shaped", 1.0, 16000.0, 1),
                  hlc::input_error);

  // 10 s of white noise: Welch PSD flat within 1 dB over [100, 0.9*Nyquist].
  const double fs = 16000.0;
  const hlc::SignalBuffer white = hlc::make_noise("white", 10.0, fs, 77);
  hlc::WelchParams params;
  params.segment_len = 512;
  const hlc::AmplitudeSpectrum psd = hlc::welch_psd(white.samples, fs, params);
  double mean_db = 0.0;
  int count = 0;
  for (int i = 0; i < psd.freqs.size(); ++i) {
    if (psd.freqs[i] < 100.0 || psd.freqs[i] > 0.9 * fs / 2.0) continue;
    mean_db += 10.0 * std::log10(psd.amplitude[i]);
    ++count;
  }
  mean_db /= count;
  for (int i = 0; i < psd.freqs.size(); ++i) {
    if (psd.freqs[i] < 100.0 || psd.freqs[i] > 0.9 * fs / 2.0) continue;
    CHECK(std::abs(10.0 * std::log10(psd.amplitude[i]) - mean_db) <= 1.0);
  }
}

TEST_CASE("speech-shaped noise follows the shipped shaping filter") {
  const double fs = 16000.0;
  const Eigen::VectorXd fir = hlc::load_ltass_fir();
  const hlc::SignalBuffer shaped =
      hlc::make_noise("speech_shaped", 10.0, fs, 202, &fir);
  hlc::WelchParams params;
  params.segment_len = 512;
  const hlc::AmplitudeSpectrum psd = hlc::welch_psd(shaped.samples, fs, params);
  const Eigen::VectorXcd h = hlc::fft::forward_real(fir, 512);

  // Compare shapes normalized at 1 kHz.
  const int ref_bin = static_cast<int>(std::lround(1000.0 / (fs / 512)));
  const double ref_psd = 10.0 * std::log10(psd.amplitude[ref_bin]);
  const double ref_fir = 20.0 * std::log10(std::abs(h[ref_bin]));
  for (int i = 0; i < psd.freqs.size(); ++i) {
    if (psd.freqs[i] < 100.0 || psd.freqs[i] > 0.9 * fs / 2.0) continue;
    const double got = 10.0 * std::log10(psd.amplitude[i]) - ref_psd;
    const double want = 20.0 * std::log10(std::abs(h[i])) - ref_fir;
    CHECK(std::abs(got - want) <= 1.0);
  }
}
