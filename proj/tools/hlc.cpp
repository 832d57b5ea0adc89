// hlc.cpp: command-line front end. Subcommands cover CF spacing, optimal
// linear compensation, GNR sweeps, long-term gain analysis of processed
// audio, channel-response metrics and the NAL-R prescription.
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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hlc/compensation.hpp"
#include "hlc/io.hpp"
#include "hlc/metrics.hpp"
#include "hlc/model.hpp"
#include "hlc/prescribe.hpp"
#include "hlc/spacing.hpp"
#include "hlc/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// HLC_THREADS caps internal parallelism. All library operations currently
// run sequentially (a cap of 1 is always honored); the value is validated so
// misconfiguration fails loudly.
void check_thread_env() {
  if (const char* env = std::getenv("HLC_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
      throw hlc::config_error("HLC_THREADS must be a positive integer");
  }
}

hlc::ModelConfig load_model_config(const std::string& path) {
  if (path.empty()) return hlc::ModelConfig{};
  return hlc::ModelConfig::from_file(path);
}

void ensure_parent_dir(const std::string& file_path) {
  const fs::path parent = fs::path(file_path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_sidecar(const std::string& path, const json& config) {
  ensure_parent_dir(path);
  hlc::write_json_file(path, config);
}

struct SpacingArgs {
  std::string strategy;
  double cf_min = 100.0;
  double cf_max = 10000.0;
  int k = 0;
  double delta = 0.0;
  bool k_given = false;
  bool delta_given = false;
  std::string model_path;
  std::string out = "spacing.csv";
};

void run_spacing(const SpacingArgs& args) {
  hlc::ModelConfig config = load_model_config(args.model_path);
  config.cf_min_hz = args.cf_min;
  config.cf_max_hz = args.cf_max;

  Eigen::VectorXd cfs;
  json extra;
  if (args.strategy == "log") {
    if (!args.k_given)
      throw hlc::input_error("--k is required for --strategy log");
    cfs = hlc::log_cfs(args.cf_min, args.cf_max, args.k);
    extra["k"] = args.k;
  } else if (args.strategy == "proposed") {
    if (!args.delta_given)
      throw hlc::input_error("--delta is required for --strategy proposed");
    if (args.k_given)
      std::cerr << "warning: --k is ignored with --strategy proposed; the "
                   "threshold controls the count\n";
    hlc::SpacingRequest req;
    req.cf_min = args.cf_min;
    req.cf_max = args.cf_max;
    req.delta = args.delta;
    req.model = config.model_template();
    req.grid_size = config.spacing_grid;
    const std::vector<double> list = hlc::propose_cfs(req);
    cfs = Eigen::Map<const Eigen::VectorXd>(
        list.data(), static_cast<Eigen::Index>(list.size()));
    extra["delta"] = args.delta;
  } else {
    throw hlc::input_error("--strategy must be 'log' or 'proposed'");
  }

  ensure_parent_dir(args.out);
  hlc::write_cfs_csv(args.out, cfs);

  json sidecar;
  sidecar["command"] = "spacing";
  sidecar["strategy"] = args.strategy;
  sidecar["cf_min_hz"] = args.cf_min;
  sidecar["cf_max_hz"] = args.cf_max;
  sidecar["params"] = extra;
  sidecar["model"] = config.to_json();
  sidecar["out"] = args.out;
  write_sidecar(args.out + ".config.json", sidecar);
}

struct CompensateArgs {
  std::string audiogram;
  std::string model_path;
  bool half_gain = false;
  bool no_plus_one = false;
  int fir_taps = 0;
  std::string fir_window = "hann";
  std::string out_dir = ".";
};

void run_compensate(const CompensateArgs& args) {
  hlc::ModelConfig config = load_model_config(args.model_path);
  if (args.no_plus_one) config.plus_one = false;

  hlc::Audiogram audiogram = hlc::resolve_audiogram(args.audiogram);
  if (args.half_gain) audiogram = hlc::half_gain(audiogram);

  double delta_used = 0.0;
  const hlc::FilterbankSpec spec = config.make_normal_spec(&delta_used);
  const hlc::Filterbank normal = hlc::build_filterbank(spec);
  hlc::HearingLossProfile profile = hlc::audiogram_to_profile(
      audiogram, spec.cf_vector(), config.hl_max_db, config.smooth);
  profile.plus_one = config.plus_one;
  const hlc::Filterbank impaired = hlc::impair_filterbank(normal, profile);
  const hlc::CompensationGain gain = hlc::optimal_gain_freq(normal, impaired);
  const double residual = hlc::restoration_residual(normal, impaired, gain);

  fs::create_directories(args.out_dir);
  const std::string gain_csv = args.out_dir + "/gain.csv";
  hlc::write_compensation_gain_csv(gain_csv, gain, spec.sample_rate);

  json residual_json;
  residual_json["relative_residual"] = residual;
  hlc::write_json_file(args.out_dir + "/residual.json", residual_json);

  if (args.fir_taps > 0) {
    const Eigen::VectorXd fir =
        hlc::fir_from_gain(gain, args.fir_taps, args.fir_window);
    hlc::write_wav_float32(args.out_dir + "/fir.wav", fir, spec.sample_rate);
    hlc::write_fir_csv(args.out_dir + "/fir_taps.csv", fir);
  }

  json sidecar;
  sidecar["command"] = "compensate";
  sidecar["audiogram"] = args.audiogram;
  sidecar["half_gain"] = args.half_gain;
  sidecar["fir_taps"] = args.fir_taps;
  sidecar["fir_window"] = args.fir_window;
  sidecar["model"] = config.to_json();
  if (delta_used > 0.0) sidecar["resolved_delta"] = delta_used;
  json cfs_json = json::array();
  for (const auto& ch : spec.channels) cfs_json.push_back(ch.cf);
  sidecar["resolved_cfs"] = cfs_json;
  sidecar["relative_residual"] = residual;
  write_sidecar(args.out_dir + "/config.json", sidecar);
}

struct SweepArgs {
  std::vector<int> k_values = {24, 32, 48, 64, 96, 128};
  std::vector<std::string> strategies = {"log", "proposed"};
  std::string audiogram;
  int ref_k = 512;
  std::string model_path;
  std::string out_dir = ".";
};

void run_gnr_sweep(const SweepArgs& args) {
  const hlc::ModelConfig config = load_model_config(args.model_path);

  std::vector<std::string> strategies;
  for (const std::string& s : args.strategies) {
    if (std::find(strategies.begin(), strategies.end(), s) != strategies.end()) {
      std::cerr << "warning: duplicate strategy '" << s << "' ignored\n";
      continue;
    }
    strategies.push_back(s);
  }

  hlc::SweepConfig sweep;
  sweep.model = config.model_template();
  sweep.audiogram = hlc::resolve_audiogram(args.audiogram);
  sweep.hl_max = config.hl_max_db;
  sweep.plus_one = config.plus_one;
  sweep.smooth = config.smooth;
  sweep.k_values = args.k_values;
  sweep.strategies = strategies;
  sweep.ref_k = args.ref_k;
  sweep.spacing_grid = config.spacing_grid;
  const std::vector<hlc::SweepRow> rows = hlc::gnr_sweep(sweep);

  fs::create_directories(args.out_dir);
  hlc::write_sweep_csv(args.out_dir + "/sweep.csv", rows);

  json sidecar;
  sidecar["command"] = "gnr-sweep";
  sidecar["audiogram"] = args.audiogram;
  sidecar["ref_k"] = args.ref_k;
  sidecar["k_values"] = args.k_values;
  sidecar["strategies"] = strategies;
  sidecar["model"] = config.to_json();
  json rows_json = json::array();
  for (const auto& row : rows) {
    json r;
    r["strategy"] = row.strategy;
    r["k"] = row.k;
    r["gnr_db"] = row.gnr_db;
    if (row.delta) r["delta"] = *row.delta;
    rows_json.push_back(r);
  }
  sidecar["rows"] = rows_json;
  write_sidecar(args.out_dir + "/config.json", sidecar);
}

struct AnalyzeArgs {
  std::string in_wav;
  std::string out_wav;
  int welch_seg = 8192;
  double overlap = 0.5;
  std::string window = "hann";
  int nfft = 0;
  std::string curve_csv = "gain.csv";
};

void run_analyze_gain(const AnalyzeArgs& args) {
  const hlc::SignalBuffer input = hlc::read_wav(args.in_wav);
  const hlc::SignalBuffer output = hlc::read_wav(args.out_wav);
  hlc::WelchParams params;
  params.segment_len = args.welch_seg;
  params.overlap = args.overlap;
  params.window = args.window;
  params.nfft = args.nfft;
  const hlc::LongTermGain gain = hlc::long_term_gain(input, output, params);

  ensure_parent_dir(args.curve_csv);
  hlc::write_gain_curve_csv(args.curve_csv, gain.curve, &gain.valid);

  json sidecar;
  sidecar["command"] = "analyze-gain";
  sidecar["in"] = args.in_wav;
  sidecar["out"] = args.out_wav;
  sidecar["welch"] = {{"segment_len", args.welch_seg},
                      {"overlap", args.overlap},
                      {"window", args.window},
                      {"nfft", params.effective_nfft()}};
  sidecar["segments"] = gain.segments;
  sidecar["inputs_digest"] = hlc::file_digest(args.in_wav) + "+" +
                             hlc::file_digest(args.out_wav);
  write_sidecar(args.curve_csv + ".config.json", sidecar);
}

struct MetricsArgs {
  std::string nh_path;
  std::string hi_path;
  std::string in_wav;
  std::string out_wav;
  double gamma = 0.001;
  std::string report = "metrics.json";
};

void run_metrics(const MetricsArgs& args) {
  const hlc::ChannelResponseFile nh = hlc::read_channel_responses(args.nh_path);
  const hlc::ChannelResponseFile hi = hlc::read_channel_responses(args.hi_path);
  if (nh.sample_rate != hi.sample_rate)
    throw hlc::input_error("metrics: channel-response sample rates differ");
  const double fs = nh.sample_rate;

  std::string digest = hlc::file_digest(args.nh_path) + "+" +
                       hlc::file_digest(args.hi_path);

  json report = json::array();
  auto add = [&report, &digest](const std::string& metric, const json& value,
                                const json& params) {
    json entry;
    entry["metric"] = metric;
    entry["value"] = value;
    entry["params"] = params;
    entry["inputs_digest"] = digest;
    report.push_back(entry);
  };

  double mae_sum = 0.0;
  for (const double ms : nh.set.segment_lengths_ms) {
    const double value = hlc::segmented_mae(nh.set, hi.set, ms, fs);
    mae_sum += value;
    add("segmented_mae", value,
        {{"segment_ms", ms}, {"sample_rate_hz", fs}});
  }

  const hlc::SerResult ser = hlc::ser(nh.set, hi.set);
  json ser_values = json::array();
  for (Eigen::Index k = 0; k < ser.db.size(); ++k) {
    json entry;
    entry["channel"] = k;
    entry["valid"] = static_cast<bool>(ser.valid[static_cast<std::size_t>(k)]);
    entry["ser_db"] = ser.db[k];
    ser_values.push_back(entry);
  }
  add("ser", ser_values, json::object());

  const bool have_signals = !args.in_wav.empty() && !args.out_wav.empty();
  if (!have_signals && (!args.in_wav.empty() || !args.out_wav.empty()))
    throw hlc::input_error("metrics: --in and --out must be given together");
  if (have_signals) {
    const hlc::SignalBuffer x = hlc::read_wav(args.in_wav);
    const hlc::SignalBuffer y = hlc::read_wav(args.out_wav);
    digest += "+" + hlc::file_digest(args.in_wav) + "+" +
              hlc::file_digest(args.out_wav);
    const double lf = hlc::low_freq_penalty(x, y);
    add("low_freq_penalty", lf, {{"cutoff_hz", 20.0}});
    add("composite_loss", mae_sum + args.gamma * lf, {{"gamma", args.gamma}});
  }

  ensure_parent_dir(args.report);
  hlc::write_json_file(args.report, report);

  json sidecar;
  sidecar["command"] = "metrics";
  sidecar["nh"] = args.nh_path;
  sidecar["hi"] = args.hi_path;
  if (have_signals) {
    sidecar["in"] = args.in_wav;
    sidecar["out"] = args.out_wav;
  }
  sidecar["gamma"] = args.gamma;
  sidecar["segment_lengths_ms"] = nh.set.segment_lengths_ms;
  sidecar["inputs_digest"] = digest;
  write_sidecar(args.report + ".config.json", sidecar);
}

struct NalrArgs {
  std::string audiogram;
  std::string csv = "nalr.csv";
  int fir_taps = 0;
  std::string fir_window = "hann";
  std::string fir_out = "nalr_fir.wav";
  std::string model_path;
};

void run_nalr(const NalrArgs& args) {
  const hlc::Audiogram audiogram = hlc::resolve_audiogram(args.audiogram);
  const hlc::NalrConstants constants = hlc::load_nalr_constants();
  const hlc::PrescriptionGain prescription = hlc::nalr_gain(audiogram, constants);

  ensure_parent_dir(args.csv);
  hlc::write_prescription_csv(args.csv, prescription);

  if (args.fir_taps > 0) {
    const hlc::ModelConfig config = load_model_config(args.model_path);
    const int half = config.nfft / 2;
    Eigen::VectorXd grid(half + 1);
    for (int i = 0; i <= half; ++i)
      grid[i] = static_cast<double>(i) * config.sample_rate_hz / config.nfft;
    const hlc::GainCurve curve =
        hlc::prescription_to_gaincurve(prescription, grid);
    hlc::CompensationGain gain;
    gain.nfft = config.nfft;
    gain.bins.resize(config.nfft);
    for (int i = 0; i <= half; ++i) gain.bins[i] = curve.gains[i];
    for (int i = half + 1; i < config.nfft; ++i)
      gain.bins[i] = std::conj(gain.bins[config.nfft - i]);
    const Eigen::VectorXd fir =
        hlc::fir_from_gain(gain, args.fir_taps, args.fir_window);
    ensure_parent_dir(args.fir_out);
    hlc::write_wav_float32(args.fir_out, fir, config.sample_rate_hz);
  }

  json sidecar;
  sidecar["command"] = "nalr";
  sidecar["audiogram"] = args.audiogram;
  sidecar["fir_taps"] = args.fir_taps;
  sidecar["out"] = args.csv;
  write_sidecar(args.csv + ".config.json", sidecar);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear auditory-model hearing-loss compensation toolkit"};
  app.require_subcommand(1);

  SpacingArgs spacing_args;
  CLI::App* spacing = app.add_subcommand(
      "spacing", "Emit a center-frequency list (CSV index,cf_hz)");
  spacing->add_option("--strategy", spacing_args.strategy,
                      "Spacing strategy: log or proposed")->required();
  spacing->add_option("--cf-min", spacing_args.cf_min, "Lowest CF, Hz");
  spacing->add_option("--cf-max", spacing_args.cf_max, "Highest CF, Hz");
  auto* k_opt = spacing->add_option("--k", spacing_args.k,
                                    "Channel count (log strategy)");
  auto* delta_opt = spacing->add_option(
      "--delta", spacing_args.delta,
      "Decay threshold in (0,1) (proposed strategy; 0.5 reproduces the default)");
  spacing->add_option("--model", spacing_args.model_path,
                      "Filterbank config JSON");
  spacing->add_option("--out", spacing_args.out, "Output CSV path");
  spacing->callback([&] {
    spacing_args.k_given = k_opt->count() > 0;
    spacing_args.delta_given = delta_opt->count() > 0;
    run_spacing(spacing_args);
  });

  CompensateArgs comp_args;
  CLI::App* comp = app.add_subcommand(
      "compensate",
      "Optimal linear compensation for an audiogram (gain CSV, FIR, residual)");
  comp->add_option("--audiogram", comp_args.audiogram,
                   "Audiogram CSV/JSON path or a Bisgaard name (n1..n7)")
      ->required();
  comp->add_option("--model", comp_args.model_path, "Filterbank config JSON");
  comp->add_flag("--half-gain", comp_args.half_gain,
                 "Halve the audiogram before compensating");
  comp->add_flag("--no-plus-one", comp_args.no_plus_one,
                 "Use the identity-preserving Q-broadening variant");
  comp->add_option("--fir-taps", comp_args.fir_taps,
                   "Export a linear-phase FIR with this many taps");
  comp->add_option("--fir-window", comp_args.fir_window,
                   "FIR window: hann, hamming, blackman, rect");
  comp->add_option("--out", comp_args.out_dir, "Output directory");
  comp->callback([&] { run_compensate(comp_args); });

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand(
      "gnr-sweep", "Gain-to-ripple ratio across spacings and channel counts");
  sweep->add_option("--k", sweep_args.k_values, "Channel counts")
      ->delimiter(',');
  sweep->add_option("--strategies", sweep_args.strategies,
                    "Spacing strategies (log, proposed)")
      ->delimiter(',');
  sweep->add_option("--audiogram", sweep_args.audiogram,
                    "Audiogram path or Bisgaard name")->required();
  sweep->add_option("--ref-k", sweep_args.ref_k,
                    "Reference channel count (>= 4 x max K)");
  sweep->add_option("--model", sweep_args.model_path, "Filterbank config JSON");
  sweep->add_option("--out", sweep_args.out_dir, "Output directory");
  sweep->callback([&] { run_gnr_sweep(sweep_args); });

  AnalyzeArgs analyze_args;
  CLI::App* analyze = app.add_subcommand(
      "analyze-gain",
      "Long-term gain of processed audio via Welch-averaged spectra");
  analyze->add_option("--in", analyze_args.in_wav, "Unprocessed WAV")->required();
  analyze->add_option("--out", analyze_args.out_wav, "Processed WAV")->required();
  analyze->add_option("--welch-seg", analyze_args.welch_seg,
                      "Welch segment length, samples");
  analyze->add_option("--overlap", analyze_args.overlap,
                      "Segment overlap fraction in [0,1)");
  analyze->add_option("--window", analyze_args.window, "Analysis window");
  analyze->add_option("--nfft", analyze_args.nfft,
                      "Transform size (0 = segment length)");
  analyze->add_option("--curve", analyze_args.curve_csv, "Output CSV path");
  analyze->callback([&] { run_analyze_gain(analyze_args); });

  MetricsArgs metrics_args;
  CLI::App* metrics = app.add_subcommand(
      "metrics",
      "Segmented MAE family, SER and composite loss between channel responses");
  metrics->add_option("--nh", metrics_args.nh_path,
                      "Normal-hearing channel-response file")->required();
  metrics->add_option("--hi", metrics_args.hi_path,
                      "Compensated/impaired channel-response file")->required();
  metrics->add_option("--in", metrics_args.in_wav,
                      "Unprocessed WAV (enables the low-frequency penalty)");
  metrics->add_option("--out", metrics_args.out_wav, "Processed WAV");
  metrics->add_option("--gamma", metrics_args.gamma,
                      "Low-frequency penalty weight");
  metrics->add_option("--report", metrics_args.report, "Report JSON path");
  metrics->callback([&] { run_metrics(metrics_args); });

  NalrArgs nalr_args;
  CLI::App* nalr = app.add_subcommand(
      "nalr", "NAL-R insertion gain for an audiogram");
  nalr->add_option("--audiogram", nalr_args.audiogram,
                   "Audiogram path or Bisgaard name")->required();
  nalr->add_option("--csv", nalr_args.csv, "Output CSV path");
  nalr->add_option("--fir-taps", nalr_args.fir_taps,
                   "Also export a linear-phase FIR WAV");
  nalr->add_option("--fir-window", nalr_args.fir_window, "FIR window");
  nalr->add_option("--fir-out", nalr_args.fir_out, "FIR WAV path");
  nalr->add_option("--model", nalr_args.model_path,
                   "Filterbank config JSON (grid for the FIR)");
  nalr->callback([&] { run_nalr(nalr_args); });

  try {
    check_thread_env();
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const hlc::input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const hlc::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const hlc::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
