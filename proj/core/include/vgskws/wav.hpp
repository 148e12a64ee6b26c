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

#pragma once

#include <filesystem>
#include <vector>

namespace vgskws {

struct Waveform {
  std::vector<double> samples;  // mono, nominal range [-1, 1]
  int sample_rate = 16000;
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// RIFF/WAVE reader for 16-bit PCM and 32-bit float; multi-channel input
/// is averaged down to mono.
Waveform read_wav(const std::filesystem::path& path);
void write_wav_pcm16(const Waveform& wave, const std::filesystem::path& path);

/// Duration from the RIFF header without reading samples.
double wav_duration_s(const std::filesystem::path& path);

}  // namespace vgskws
