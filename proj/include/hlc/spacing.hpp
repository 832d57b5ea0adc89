// spacing.hpp: center-frequency selection (log-spaced baseline and the
// decay-threshold algorithm that suppresses compensation ripple) and the
// gain-to-ripple ratio used to compare spacings.
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
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hlc/common.hpp"
#include "hlc/compensation.hpp"
#include "hlc/gain_curve.hpp"
#include "hlc/model.hpp"

namespace hlc {

inline constexpr double kGnrCapDb = 300.0;

/// Inputs for the decay-threshold spacing algorithm: probe filters are
/// normal-hearing channels drawn from the model template, evaluated on a
/// uniform grid of `grid_size` bins up to Nyquist; the grid brackets the
/// decay crossing, which is then refined on the analytic response.
struct SpacingRequest {
  double cf_min = 100.0;
  double cf_max = 10000.0;
  double delta = 0.5;  // decay threshold, in (0, 1)
  ModelTemplate model;
  int grid_size = 1 << 15;

  void validate() const {
    if (!(cf_min > 0.0) || !(cf_max >= cf_min))
      throw input_error("spacing: need 0 < cf_min <= cf_max");
    if (!(cf_max < model.sample_rate / 2.0))
      throw input_error("spacing: cf_max must be below Nyquist");
    if (!(delta > 0.0) || !(delta < 1.0))
      throw input_error("spacing: delta must be in (0, 1)");
    if (grid_size < 16) throw input_error("spacing: grid too coarse");
  }
};

/// k geometrically spaced frequencies, endpoints inclusive.
inline Eigen::VectorXd log_cfs(double cf_min, double cf_max, int k) {
  if (k < 2) throw input_error("log_cfs: k must be >= 2");
  if (!(cf_min > 0.0) || !(cf_max > cf_min))
    throw input_error("log_cfs: need 0 < cf_min < cf_max");
  Eigen::VectorXd cfs(k);
  const double ratio = std::log(cf_max / cf_min);
  for (int i = 0; i < k; ++i)
    cfs[i] = cf_min * std::exp(ratio * static_cast<double>(i) /
                               static_cast<double>(k - 1));
  cfs[0] = cf_min;
  cfs[k - 1] = cf_max;
  return cfs;
}

namespace detail {

inline double probe_magnitude(const GammatoneParams& p, double f) {
  return std::abs(gammatone_response_at(p, f));
}

// Ternary search for the magnitude peak within [lo, hi].
inline double refine_peak(const GammatoneParams& p, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-10 * (1.0 + hi); ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (probe_magnitude(p, m1) < probe_magnitude(p, m2))
      lo = m1;
    else
      hi = m2;
  }
  return 0.5 * (lo + hi);
}

// Bisection for |z(f)| = target within [lo, hi], assuming a downward
// crossing.
inline double refine_crossing(const GammatoneParams& p, double lo, double hi,
                              double target) {
  for (int it = 0; it < 200 && hi - lo > 1e-10 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (probe_magnitude(p, mid) < target)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Core of the spacing algorithm; stops early once `limit` CFs are found
// (limit = 0 means unlimited).
inline std::vector<double> propose_cfs_impl(const SpacingRequest& req,
                                            std::size_t limit) {
  req.validate();
  const int grid = req.grid_size;
  const double nyquist = req.model.sample_rate / 2.0;
  const double df = nyquist / static_cast<double>(grid);
  std::vector<double> magnitudes(static_cast<std::size_t>(grid));
  std::vector<double> cfs;
  double v = req.cf_min;
  while (v < req.cf_max) {
    if (limit > 0 && cfs.size() >= limit) return cfs;
    const GammatoneParams probe = req.model.channel_at(v);
    int j_max = 0;
    double peak_grid = -1.0;
    for (int j = 0; j < grid; ++j) {
      const double mag = probe_magnitude(probe, static_cast<double>(j) * df);
      magnitudes[static_cast<std::size_t>(j)] = mag;
      if (mag > peak_grid) {
        peak_grid = mag;
        j_max = j;
      }
    }
    const double peak_freq =
        refine_peak(probe, std::max(0, j_max - 1) * df,
                    std::min(grid - 1, j_max + 1) * df);
    const double peak_mag = probe_magnitude(probe, peak_freq);
    const double target = req.delta * peak_mag;

    // The decay search starts beyond both the current CF and the response
    // peak; a threshold close to 1 would otherwise catch the rising slope of
    // a peak that sits above v and step backwards.
    const double scan_from = std::max(v, peak_freq);
    int cross_idx = -1;
    for (int j = 0; j < grid; ++j) {
      const double f = static_cast<double>(j) * df;
      if (f > scan_from && magnitudes[static_cast<std::size_t>(j)] < target) {
        cross_idx = j;
        break;
      }
    }
    if (cross_idx < 0)
      throw numeric_error(
          "propose_cfs: response never decays below delta before Nyquist at "
          "cf = " + std::to_string(v) + " Hz");
    const double lo = std::max((cross_idx - 1) * df, scan_from);
    const double hi = cross_idx * df;
    const double crossing = (probe_magnitude(probe, lo) < target)
                                ? lo
                                : refine_crossing(probe, lo, hi, target);

    cfs.push_back(v);
    const double step = crossing - peak_freq;
    if (!(step > 0.0))
      throw numeric_error("propose_cfs: nonpositive step at cf = " +
                          std::to_string(v) + " Hz");
    v += step;
  }
  return cfs;
}

}  // namespace detail

/// Decay-threshold spacing: starting from cf_min, each step advances by the
/// offset at which the current probe filter's magnitude has decayed to delta
/// times its peak. The produced list is strictly increasing and lies in
/// [cf_min, cf_max); cf_max itself is never appended.
inline std::vector<double> propose_cfs(const SpacingRequest& req) {
  return detail::propose_cfs_impl(req, 0);
}

/// Find the decay threshold that makes propose_cfs produce exactly
/// target_count CFs (the count is nondecreasing in delta). Throws if no
/// threshold in (0, 1) hits the count.
inline double solve_delta_for_count(SpacingRequest req, int target_count) {
  if (target_count < 1)
    throw input_error("solve_delta_for_count: target must be >= 1");
  const std::size_t target = static_cast<std::size_t>(target_count);
  double lo = 1e-6;
  double hi = 1.0 - 1e-9;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    req.delta = mid;
    const std::size_t count = detail::propose_cfs_impl(req, target + 1).size();
    if (count == target) return mid;
    if (count < target)
      lo = mid;
    else
      hi = mid;
  }
  throw numeric_error("solve_delta_for_count: no delta yields " +
                      std::to_string(target_count) + " CFs");
}

/// GNR = 10 log10(||g_ref||^2 / ||g_ref - g||^2), capped at +/-300 dB.
inline double gnr(const GainCurve& g_ref, const GainCurve& g) {
  g_ref.validate();
  g.validate();
  if (g_ref.freqs.size() != g.freqs.size() || g_ref.freqs != g.freqs)
    throw input_error("gnr: frequency grids differ");
  const double ref2 = g_ref.gains.squaredNorm();
  const double err2 = (g_ref.gains - g.gains).squaredNorm();
  if (err2 <= 0.0) return kGnrCapDb;
  if (ref2 <= 0.0) return -kGnrCapDb;
  const double value = 10.0 * std::log10(ref2 / err2);
  return std::clamp(value, -kGnrCapDb, kGnrCapDb);
}

/// Magnitude of the optimal compensation gain on the nonnegative half grid,
/// streamed channel-by-channel so large reference banks never materialize.
/// Matches |optimal_gain_freq(...)| bin for bin.
inline GainCurve optimal_gain_curve(const FilterbankSpec& normal_spec,
                                    const HearingLossProfile& profile,
                                    double eps_scale = kGainDenominatorFloor) {
  normal_spec.validate();
  profile.validate();
  const int k_count = static_cast<int>(normal_spec.channels.size());
  if (profile.per_cf_hl.size() != k_count)
    throw input_error("optimal_gain_curve: profile/spec channel mismatch");
  const int n = normal_spec.nfft;
  const int half = n / 2;
  Eigen::VectorXcd num = Eigen::VectorXcd::Zero(half + 1);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(half + 1);
  for (int k = 0; k < k_count; ++k) {
    const GammatoneParams& nh = normal_spec.channels[static_cast<std::size_t>(k)];
    GammatoneParams hi = nh;
    const double hl = profile.per_cf_hl[k];
    hi.gain *= db_to_linear(-hl);
    hi.q = impaired_q(nh.q, hl, profile.hl_max, profile.plus_one);
    const Eigen::VectorXcd row_n =
        sample_response_half(nh, n, normal_spec.sample_rate);
    const Eigen::VectorXcd row_d =
        sample_response_half(hi, n, normal_spec.sample_rate);
    for (int i = 0; i <= half; ++i) {
      num[i] += std::conj(row_d[i]) * row_n[i];
      den[i] += std::norm(row_d[i]);
    }
  }
  const double eps = eps_scale * den.maxCoeff();
  GainCurve curve;
  curve.freqs.resize(half + 1);
  curve.gains.resize(half + 1);
  for (int i = 0; i <= half; ++i) {
    curve.freqs[i] = static_cast<double>(i) * normal_spec.sample_rate / n;
    curve.gains[i] = std::abs(num[i] / std::max(den[i], eps));
  }
  return curve;
}

/// One cell of a GNR sweep.
struct SweepRow {
  std::string strategy;
  int k = 0;
  double gnr_db = 0.0;
  std::optional<double> delta;  // resolved decay threshold (proposed only)
};

struct SweepConfig {
  ModelTemplate model;
  Audiogram audiogram;
  double hl_max = 105.0;
  bool plus_one = true;
  bool smooth = false;
  std::vector<int> k_values;
  std::vector<std::string> strategies;  // "log" and/or "proposed"
  int ref_k = 512;
  int spacing_grid = 1 << 15;
};

namespace detail {

/// Restrict a gain curve to the closed band [lo, hi].
inline GainCurve band_limit(const GainCurve& curve, double lo, double hi) {
  int count = 0;
  for (int i = 0; i < curve.freqs.size(); ++i)
    if (curve.freqs[i] >= lo && curve.freqs[i] <= hi) ++count;
  GainCurve out;
  out.freqs.resize(count);
  out.gains.resize(count);
  int j = 0;
  for (int i = 0; i < curve.freqs.size(); ++i) {
    if (curve.freqs[i] < lo || curve.freqs[i] > hi) continue;
    out.freqs[j] = curve.freqs[i];
    out.gains[j] = curve.gains[i];
    ++j;
  }
  return out;
}

}  // namespace detail

/// Gain-to-ripple ratio per (strategy, K): each strategy's gain is compared
/// against a reference gain of the same spacing family computed with ref_k
/// channels, for which the ripple vanishes. Curves are compared over the
/// modeled band [cf_min, cf_max]; outside it the gain is a single filter
/// tail's extrapolation, not spacing-induced ripple. Rows follow input order.
inline std::vector<SweepRow> gnr_sweep(const SweepConfig& cfg) {
  if (cfg.k_values.empty() || cfg.strategies.empty())
    throw input_error("gnr_sweep: empty K list or strategy list");
  for (int k : cfg.k_values) {
    if (k < 2) throw input_error("gnr_sweep: K must be >= 2");
    // The reference must be far denser than the cell, except for the exact
    // self-reference limit.
    if (4 * k > cfg.ref_k && k != cfg.ref_k)
      throw input_error("gnr_sweep: ref_k must be >= 4 x K (or K == ref_k)");
  }

  auto curve_for = [&cfg](const std::string& strategy, int count,
                          std::optional<double>* delta_out) -> GainCurve {
    Eigen::VectorXd cfs;
    if (strategy == "log") {
      cfs = log_cfs(cfg.model.cf_min, cfg.model.cf_max, count);
    } else if (strategy == "proposed") {
      SpacingRequest req;
      req.cf_min = cfg.model.cf_min;
      req.cf_max = cfg.model.cf_max;
      req.model = cfg.model;
      req.grid_size = cfg.spacing_grid;
      const double delta = solve_delta_for_count(req, count);
      if (delta_out) *delta_out = delta;
      req.delta = delta;
      const std::vector<double> list = propose_cfs(req);
      cfs = Eigen::Map<const Eigen::VectorXd>(list.data(),
                                              static_cast<Eigen::Index>(list.size()));
    } else {
      throw input_error("gnr_sweep: unknown strategy '" + strategy + "'");
    }
    const FilterbankSpec spec = cfg.model.make_spec(cfs);
    const HearingLossProfile profile =
        [&] {
          HearingLossProfile p = audiogram_to_profile(cfg.audiogram, cfs,
                                                      cfg.hl_max, cfg.smooth);
          p.plus_one = cfg.plus_one;
          return p;
        }();
    return detail::band_limit(optimal_gain_curve(spec, profile),
                              cfg.model.cf_min, cfg.model.cf_max);
  };

  std::vector<SweepRow> rows;
  for (const std::string& strategy : cfg.strategies) {
    std::optional<double> ref_delta;
    const GainCurve ref = curve_for(strategy, cfg.ref_k, &ref_delta);
    for (int k : cfg.k_values) {
      SweepRow row;
      row.strategy = strategy;
      row.k = k;
      const GainCurve g = curve_for(strategy, k, &row.delta);
      row.gnr_db = gnr(ref, g);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace hlc
