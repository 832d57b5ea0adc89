// io.hpp: file formats and configuration: audiogram CSV/JSON, filterbank
// config JSON, the binary channel-response container, CSV emitters with
// fixed float formatting, data-file resolution and digests.
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

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlc/common.hpp"
#include "hlc/compensation.hpp"
#include "hlc/metrics.hpp"
#include "hlc/model.hpp"
#include "hlc/prescribe.hpp"
#include "hlc/spacing.hpp"

#ifndef HLC_DEFAULT_DATA_DIR
#define HLC_DEFAULT_DATA_DIR ""
#endif

namespace hlc {

/// Directory holding the shipped data files. HLC_DATA_DIR overrides the
/// compiled-in default.
inline std::string data_dir() {
  if (const char* env = std::getenv("HLC_DATA_DIR"); env && *env) return env;
  return HLC_DEFAULT_DATA_DIR;
}

/// All emitted CSV floats use 9 significant digits.
inline std::string fmt_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("digest: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Parse a two-column CSV with the given header, skipping '#' comments.
inline std::vector<std::pair<double, double>> read_two_column_csv(
    const std::string& path, const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw input_error("csv: cannot open " + path);
  std::vector<std::pair<double, double>> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header_seen) {
      if (t != expected_header)
        throw input_error("csv: expected header '" + expected_header +
                          "' in " + path);
      header_seen = true;
      continue;
    }
    const std::size_t comma = t.find(',');
    if (comma == std::string::npos)
      throw input_error("csv: malformed row '" + t + "' in " + path);
    try {
      rows.emplace_back(std::stod(t.substr(0, comma)),
                        std::stod(t.substr(comma + 1)));
    } catch (const std::exception&) {
      throw input_error("csv: non-numeric row '" + t + "' in " + path);
    }
  }
  if (!header_seen) throw input_error("csv: missing header in " + path);
  return rows;
}

}  // namespace detail

/// Load an audiogram from CSV (`freq_hz,hl_db`) or a JSON array of
/// {freq_hz, hl_db} objects, by file extension.
inline Audiogram load_audiogram(const std::string& path) {
  Audiogram a;
  if (detail::ends_with(path, ".json")) {
    std::ifstream in(path);
    if (!in) throw input_error("audiogram: cannot open " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw input_error("audiogram: bad JSON in " + path + ": " + e.what());
    }
    if (!j.is_array()) throw input_error("audiogram: JSON must be an array");
    for (const auto& item : j) {
      if (!item.contains("freq_hz") || !item.contains("hl_db"))
        throw input_error("audiogram: JSON entries need freq_hz and hl_db");
      try {
        a.points.push_back({item["freq_hz"].get<double>(),
                            item["hl_db"].get<double>()});
      } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("audiogram: bad JSON entry: ") + e.what());
      }
    }
  } else {
    for (const auto& [f, hl] : detail::read_two_column_csv(path, "freq_hz,hl_db"))
      a.points.push_back({f, hl});
  }
  a.validate();
  return a;
}

/// Accepts either a path or a standard-audiogram name (n1..n7, case
/// insensitive) resolved against the data directory.
inline Audiogram resolve_audiogram(const std::string& name_or_path) {
  if (name_or_path.size() == 2 &&
      (name_or_path[0] == 'n' || name_or_path[0] == 'N') &&
      name_or_path[1] >= '1' && name_or_path[1] <= '7') {
    return load_audiogram(data_dir() + "/audiograms/bisgaard_n" +
                          name_or_path.substr(1, 1) + ".csv");
  }
  return load_audiogram(name_or_path);
}

inline NalrConstants load_nalr_constants(const std::string& path = "") {
  const std::string file =
      path.empty() ? data_dir() + "/nalr_constants.csv" : path;
  NalrConstants c;
  for (const auto& [f, k] : detail::read_two_column_csv(file, "freq_hz,k_db")) {
    c.freqs_hz.push_back(f);
    c.k_db.push_back(k);
  }
  c.validate();
  return c;
}

/// One FIR tap per row under a `tap` header; '#' comments allowed.
inline Eigen::VectorXd load_fir_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("fir: cannot open " + path);
  std::vector<double> taps;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header_seen) {
      if (t != "tap") throw input_error("fir: expected 'tap' header in " + path);
      header_seen = true;
      continue;
    }
    try {
      taps.push_back(std::stod(t));
    } catch (const std::exception&) {
      throw input_error("fir: non-numeric tap '" + t + "' in " + path);
    }
  }
  if (taps.empty()) throw input_error("fir: no taps in " + path);
  return Eigen::Map<const Eigen::VectorXd>(taps.data(),
                                           static_cast<Eigen::Index>(taps.size()));
}

inline void write_fir_csv(const std::string& path, const Eigen::VectorXd& taps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("fir: cannot write " + path);
  out << "tap\n";
  for (Eigen::Index i = 0; i < taps.size(); ++i) out << fmt_g9(taps[i]) << "\n";
}

/// The LTASS-approximating shaping filter used for speech-shaped noise.
inline Eigen::VectorXd load_ltass_fir(const std::string& path = "") {
  return load_fir_csv(path.empty() ? data_dir() + "/ltass_fir.csv" : path);
}

// ---------------------------------------------------------------------------
// Channel-response container: 32-byte header (magic "HLCRESP1", u32 K,
// u32 T, f64 sample_rate, 8 reserved zero bytes), then K*T little-endian
// float32 samples, row-major (channel-major).
// ---------------------------------------------------------------------------

struct ChannelResponseFile {
  ChannelResponseSet set;
  double sample_rate = 0.0;
};

inline void write_channel_responses(const std::string& path,
                                    const ChannelResponseSet& set,
                                    double sample_rate) {
  set.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("crs: cannot write " + path);
  const char magic[8] = {'H', 'L', 'C', 'R', 'E', 'S', 'P', '1'};
  out.write(magic, 8);
  const std::uint32_t k = static_cast<std::uint32_t>(set.data.rows());
  const std::uint32_t t = static_cast<std::uint32_t>(set.data.cols());
  out.write(reinterpret_cast<const char*>(&k), 4);
  out.write(reinterpret_cast<const char*>(&t), 4);
  out.write(reinterpret_cast<const char*>(&sample_rate), 8);
  const char zeros[8] = {0};
  out.write(zeros, 8);
  for (Eigen::Index row = 0; row < set.data.rows(); ++row) {
    for (Eigen::Index col = 0; col < set.data.cols(); ++col) {
      const float v = static_cast<float>(set.data(row, col));
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  }
  if (!out) throw input_error("crs: write failed: " + path);
}

inline ChannelResponseFile read_channel_responses(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("crs: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "HLCRESP1", 8) != 0)
    throw input_error("crs: bad magic in " + path);
  std::uint32_t k = 0;
  std::uint32_t t = 0;
  double rate = 0.0;
  in.read(reinterpret_cast<char*>(&k), 4);
  in.read(reinterpret_cast<char*>(&t), 4);
  in.read(reinterpret_cast<char*>(&rate), 8);
  char reserved[8];
  in.read(reserved, 8);
  if (!in || k == 0 || t == 0)
    throw input_error("crs: bad header in " + path);
  ChannelResponseFile file;
  file.sample_rate = rate;
  file.set.data.resize(k, t);
  for (std::uint32_t row = 0; row < k; ++row) {
    for (std::uint32_t col = 0; col < t; ++col) {
      float v;
      in.read(reinterpret_cast<char*>(&v), 4);
      file.set.data(row, col) = static_cast<double>(v);
    }
  }
  if (!in) throw input_error("crs: truncated data in " + path);
  return file;
}

// ---------------------------------------------------------------------------
// CSV emitters for the documented output formats.
// ---------------------------------------------------------------------------

inline void write_cfs_csv(const std::string& path, const Eigen::VectorXd& cfs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("csv: cannot write " + path);
  out << "index,cf_hz\n";
  for (Eigen::Index i = 0; i < cfs.size(); ++i)
    out << i << "," << fmt_g9(cfs[i]) << "\n";
}

inline void write_gain_curve_csv(const std::string& path, const GainCurve& curve,
                                 const std::vector<std::uint8_t>* valid = nullptr) {
  curve.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("csv: cannot write " + path);
  out << "freq_hz,gain_linear,gain_db\n";
  for (Eigen::Index i = 0; i < curve.freqs.size(); ++i) {
    if (valid && !(*valid)[static_cast<std::size_t>(i)]) continue;
    out << fmt_g9(curve.freqs[i]) << "," << fmt_g9(curve.gains[i]) << ","
        << fmt_g9(linear_to_db(curve.gains[i])) << "\n";
  }
}

inline void write_compensation_gain_csv(const std::string& path,
                                        const CompensationGain& gain,
                                        double sample_rate) {
  gain.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("csv: cannot write " + path);
  out << "freq_hz,gain_linear,gain_db,phase_rad\n";
  const int half = gain.nfft / 2;
  for (int i = 0; i <= half; ++i) {
    const double f = static_cast<double>(i) * sample_rate / gain.nfft;
    const double mag = std::abs(gain.bins[i]);
    out << fmt_g9(f) << "," << fmt_g9(mag) << "," << fmt_g9(linear_to_db(mag))
        << "," << fmt_g9(std::arg(gain.bins[i])) << "\n";
  }
}

inline void write_sweep_csv(const std::string& path,
                            const std::vector<SweepRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("csv: cannot write " + path);
  out << "strategy,k,gnr_db\n";
  for (const auto& row : rows)
    out << row.strategy << "," << row.k << "," << fmt_g9(row.gnr_db) << "\n";
}

inline void write_prescription_csv(const std::string& path,
                                   const PrescriptionGain& p) {
  p.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("csv: cannot write " + path);
  out << "freq_hz,insertion_gain_db\n";
  for (Eigen::Index i = 0; i < p.freqs.size(); ++i)
    out << fmt_g9(p.freqs[i]) << "," << fmt_g9(p.insertion_gain_db[i]) << "\n";
}

// ---------------------------------------------------------------------------
// Filterbank configuration.
// ---------------------------------------------------------------------------

/// JSON-configurable model description. `spacing` is "log", "proposed" or an
/// explicit CF array. For "proposed", an explicit delta wins; otherwise the
/// threshold is solved so the list has exactly k entries.
struct ModelConfig {
  int k = 128;
  double cf_min_hz = 100.0;
  double cf_max_hz = 10000.0;
  std::string spacing = "log";
  std::vector<double> explicit_cfs;
  double q_min = 0.0;
  double q_max = 10.0;
  int order = 1;
  double sample_rate_hz = 32000.0;
  int nfft = 4096;
  double hl_max_db = 105.0;
  bool plus_one = true;
  bool smooth = false;
  double delta = 0.0;  // 0 means "not set"
  int spacing_grid = 1 << 15;

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    try {
      if (j.contains("k")) c.k = j["k"].get<int>();
      if (j.contains("cf_min_hz")) c.cf_min_hz = j["cf_min_hz"].get<double>();
      if (j.contains("cf_max_hz")) c.cf_max_hz = j["cf_max_hz"].get<double>();
      if (j.contains("spacing")) {
        if (j["spacing"].is_array()) {
          c.spacing = "explicit";
          c.explicit_cfs = j["spacing"].get<std::vector<double>>();
        } else {
          c.spacing = j["spacing"].get<std::string>();
        }
      }
      if (j.contains("q_min")) c.q_min = j["q_min"].get<double>();
      if (j.contains("q_max")) c.q_max = j["q_max"].get<double>();
      if (j.contains("order")) c.order = j["order"].get<int>();
      if (j.contains("sample_rate_hz"))
        c.sample_rate_hz = j["sample_rate_hz"].get<double>();
      if (j.contains("nfft")) c.nfft = j["nfft"].get<int>();
      if (j.contains("hl_max_db")) c.hl_max_db = j["hl_max_db"].get<double>();
      if (j.contains("plus_one")) c.plus_one = j["plus_one"].get<bool>();
      if (j.contains("smooth")) c.smooth = j["smooth"].get<bool>();
      if (j.contains("delta")) c.delta = j["delta"].get<double>();
      if (j.contains("spacing_grid"))
        c.spacing_grid = j["spacing_grid"].get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw config_error(std::string("model config: ") + e.what());
    }
    return c;
  }

  static ModelConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("model config: cannot open " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw config_error("model config: bad JSON in " + path + ": " + e.what());
    }
    return from_json(j);
  }

  ModelTemplate model_template() const {
    ModelTemplate t;
    t.cf_min = cf_min_hz;
    t.cf_max = cf_max_hz;
    t.q_min = q_min;
    t.q_max = q_max;
    t.order = order;
    t.sample_rate = sample_rate_hz;
    t.nfft = nfft;
    return t;
  }

  /// Resolve the CF list; for "proposed" also reports the threshold used.
  Eigen::VectorXd resolve_cfs(double* delta_used = nullptr) const {
    if (spacing == "log") return log_cfs(cf_min_hz, cf_max_hz, k);
    if (spacing == "explicit") {
      if (explicit_cfs.empty())
        throw config_error("model config: empty explicit CF list");
      return Eigen::Map<const Eigen::VectorXd>(
          explicit_cfs.data(), static_cast<Eigen::Index>(explicit_cfs.size()));
    }
    if (spacing == "proposed") {
      SpacingRequest req;
      req.cf_min = cf_min_hz;
      req.cf_max = cf_max_hz;
      req.model = model_template();
      req.grid_size = spacing_grid;
      req.delta = delta > 0.0 ? delta : solve_delta_for_count(req, k);
      if (delta_used) *delta_used = req.delta;
      const std::vector<double> list = propose_cfs(req);
      if (list.empty()) throw config_error("model config: no CFs produced");
      return Eigen::Map<const Eigen::VectorXd>(
          list.data(), static_cast<Eigen::Index>(list.size()));
    }
    throw config_error("model config: unknown spacing '" + spacing + "'");
  }

  FilterbankSpec make_normal_spec(double* delta_used = nullptr) const {
    return model_template().make_spec(resolve_cfs(delta_used));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["k"] = k;
    j["cf_min_hz"] = cf_min_hz;
    j["cf_max_hz"] = cf_max_hz;
    if (spacing == "explicit")
      j["spacing"] = explicit_cfs;
    else
      j["spacing"] = spacing;
    j["q_min"] = q_min;
    j["q_max"] = q_max;
    j["order"] = order;
    j["sample_rate_hz"] = sample_rate_hz;
    j["nfft"] = nfft;
    j["hl_max_db"] = hl_max_db;
    j["plus_one"] = plus_one;
    j["smooth"] = smooth;
    if (delta > 0.0) j["delta"] = delta;
    j["spacing_grid"] = spacing_grid;
    return j;
  }
};

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("json: cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace hlc
