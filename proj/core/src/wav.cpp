// Copyright 2026 The vgskws Authors
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

#include "vgskws/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "vgskws/error.hpp"

namespace vgskws {

namespace fs = std::filesystem;

namespace {

struct Format {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  std::uint32_t data_bytes = 0;
  std::streampos data_pos = 0;
};

std::uint32_t u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

Format read_format(std::ifstream& in, const fs::path& path) {
  unsigned char riff[12];
  in.read(reinterpret_cast<char*>(riff), 12);
  if (!in || std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0)
    throw ParseError(path.string(), 0, "not a RIFF/WAVE file");
  Format fmt;
  bool have_fmt = false;
  while (true) {
    unsigned char hdr[8];
    in.read(reinterpret_cast<char*>(hdr), 8);
    if (!in) throw ParseError(path.string(), 0, "missing data chunk");
    const std::uint32_t size = u32(hdr + 4);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      std::vector<unsigned char> body(size);
      in.read(reinterpret_cast<char*>(body.data()), size);
      if (!in || size < 16) throw ParseError(path.string(), 0, "bad fmt chunk");
      fmt.tag = u16(body.data());
      fmt.channels = u16(body.data() + 2);
      fmt.rate = u32(body.data() + 4);
      fmt.bits = u16(body.data() + 14);
      if (fmt.tag == 0xFFFE && size >= 26) fmt.tag = u16(body.data() + 24);  // extensible
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) throw ParseError(path.string(), 0, "data chunk before fmt chunk");
      fmt.data_bytes = size;
      fmt.data_pos = in.tellg();
      break;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
    if (size & 1) in.seekg(1, std::ios::cur);
  }
  const bool pcm16 = fmt.tag == 1 && fmt.bits == 16;
  const bool float32 = fmt.tag == 3 && fmt.bits == 32;
  if (!pcm16 && !float32) throw ParseError(path.string(), 0, "only 16-bit PCM and 32-bit float WAV are supported");
  if (fmt.channels == 0) throw ParseError(path.string(), 0, "zero channels");
  return fmt;
}

}  // namespace

Waveform read_wav(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("wav", "cannot open " + path.string());
  const Format fmt = read_format(in, path);
  std::vector<unsigned char> data(fmt.data_bytes);
  in.read(reinterpret_cast<char*>(data.data()), fmt.data_bytes);
  const std::size_t got = static_cast<std::size_t>(in.gcount());
  const std::size_t bytes_per = fmt.bits / 8;
  const std::size_t frames = got / (bytes_per * fmt.channels);

  Waveform w;
  w.sample_rate = static_cast<int>(fmt.rate);
  w.samples.assign(frames, 0.0);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt.channels; ++c) {
      const unsigned char* p = data.data() + (i * fmt.channels + c) * bytes_per;
      if (fmt.bits == 16) {
        acc += static_cast<std::int16_t>(u16(p)) / 32768.0;
      } else {
        float f;
        std::memcpy(&f, p, 4);
        acc += f;
      }
    }
    w.samples[i] = acc / fmt.channels;
  }
  return w;
}

double wav_duration_s(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("wav", "cannot open " + path.string());
  const Format fmt = read_format(in, path);
  const double frames = static_cast<double>(fmt.data_bytes) / ((fmt.bits / 8) * fmt.channels);
  return frames / fmt.rate;
}

void write_wav_pcm16(const Waveform& wave, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("wav", "cannot write " + path.string());
  auto put32 = [&](std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  auto put16 = [&](std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
  };
  const auto data_bytes = static_cast<std::uint32_t>(wave.samples.size() * 2);
  out.write("RIFF", 4);
  put32(36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put32(16);
  put16(1);
  put16(1);
  put32(static_cast<std::uint32_t>(wave.sample_rate));
  put32(static_cast<std::uint32_t>(wave.sample_rate * 2));
  put16(2);
  put16(16);
  out.write("data", 4);
  put32(data_bytes);
  for (double s : wave.samples) {
    const double clipped = std::clamp(s, -1.0, 32767.0 / 32768.0);
    put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(clipped * 32768.0))));
  }
}

}  // namespace vgskws
