// wav.hpp: minimal RIFF/WAVE reader and writer. Mono PCM16 and float32 are
// read; float32 is written. Stereo files are rejected.
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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hlc/common.hpp"
#include "hlc/metrics.hpp"

namespace hlc {

namespace detail {

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4] = {0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2] = {0, 0};
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline void write_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace detail

inline SignalBuffer read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("wav: cannot open " + path);
  char tag[4];
  in.read(tag, 4);
  if (std::memcmp(tag, "RIFF", 4) != 0) throw input_error("wav: not RIFF: " + path);
  detail::read_u32(in);
  in.read(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0) throw input_error("wav: not WAVE: " + path);

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  std::vector<char> data;
  bool have_fmt = false;
  bool have_data = false;
  while (in && !(have_fmt && have_data)) {
    in.read(tag, 4);
    if (!in) break;
    const std::uint32_t size = detail::read_u32(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = detail::read_u16(in);
      channels = detail::read_u16(in);
      rate = detail::read_u32(in);
      detail::read_u32(in);  // byte rate
      detail::read_u16(in);  // block align
      bits = detail::read_u16(in);
      if (size > 16) in.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data.resize(size);
      in.read(data.data(), size);
      have_data = true;
    } else {
      in.seekg(size + (size % 2), std::ios::cur);
    }
  }
  if (!have_fmt || !have_data) throw input_error("wav: missing chunks: " + path);
  if (channels != 1)
    throw input_error("wav: only mono files are supported (got " +
                      std::to_string(channels) + " channels): " + path);

  SignalBuffer buf;
  buf.sample_rate = static_cast<double>(rate);
  if (format == 1 && bits == 16) {
    const std::size_t n = data.size() / 2;
    buf.samples.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const std::int16_t v = static_cast<std::int16_t>(
          static_cast<unsigned char>(data[2 * i]) |
          (static_cast<unsigned char>(data[2 * i + 1]) << 8));
      buf.samples[static_cast<Eigen::Index>(i)] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    const std::size_t n = data.size() / 4;
    buf.samples.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      float v;
      std::memcpy(&v, data.data() + 4 * i, 4);
      buf.samples[static_cast<Eigen::Index>(i)] = static_cast<double>(v);
    }
  } else {
    throw input_error("wav: unsupported encoding (PCM16 or float32 only): " +
                      path);
  }
  return buf;
}

inline void write_wav_float32(const std::string& path,
                              const Eigen::VectorXd& samples,
                              double sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("wav: cannot write " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(samples.size());
  const std::uint32_t data_bytes = n * 4;
  out.write("RIFF", 4);
  detail::write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  detail::write_u32(out, 16);
  detail::write_u16(out, 3);  // IEEE float
  detail::write_u16(out, 1);  // mono
  const std::uint32_t rate = static_cast<std::uint32_t>(sample_rate);
  detail::write_u32(out, rate);
  detail::write_u32(out, rate * 4);
  detail::write_u16(out, 4);
  detail::write_u16(out, 32);
  out.write("data", 4);
  detail::write_u32(out, data_bytes);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const float v = static_cast<float>(samples[i]);
    char b[4];
    std::memcpy(b, &v, 4);
    out.write(b, 4);
  }
  if (!out) throw input_error("wav: write failed: " + path);
}

}  // namespace hlc
