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

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "vgskws/corpus.hpp"
#include "vgskws/rng.hpp"
#include "vgskws/supervision.hpp"

namespace vgskws {

/// Synthetic speech-image corpus parameters.
///
/// Utterances are sequences of "concepts" (V keywords plus filler words).
/// The concept sequence depends only on (seed, split, index), so corpora
/// generated with the same seed in two audio languages are translations of
/// one another.  Each language spells a concept as a short sequence of
/// phones drawn from an inventory shared by all languages; each phone is a
/// fixed band pattern over the feature dimensions.
struct ToyConfig {
  int vocab_size = 12;
  int num_fillers = 8;
  int n_train = 400;
  int n_dev = 100;
  int n_test = 100;
  std::pair<int, int> words_per_utt{2, 5};
  std::pair<int, int> word_dur_frames{12, 24};
  int feature_dim = 39;
  int num_phones = 16;
  std::pair<int, int> phones_per_word{2, 3};
  double silence_prob = 0.3;
  std::pair<int, int> silence_frames{4, 10};
  double frame_noise = 0.3;
  double silence_noise = 0.1;
  // Tagger noise: present keywords get hit_mean +- hit_spread; absent
  // keywords fire with false_alarm_rate and then look like hits.
  double hit_mean = 1.0;
  double hit_spread = 0.0;
  double false_alarm_rate = 0.0;
  std::string audio_language = "en";
  std::string query_language = "en";
  std::uint64_t seed = 7;

  /// Throws ConfigError.
  void validate() const;
};

void to_json(nlohmann::json& j, const ToyConfig& cfg);
void from_json(const nlohmann::json& j, ToyConfig& cfg);

/// Keyword strings for a query language ("en" uses the Flickr8k keyword
/// list; other languages get synthetic romanised forms).
std::vector<std::string> toy_keywords(const std::string& language, int count);

/// Surface form of filler concept `i` in `language`.
std::string toy_filler(const std::string& language, int i);

/// Phone sequence spelling concept `concept_id` in `language`.  Spellings are
/// unique within a language.
std::vector<int> toy_spelling(const ToyConfig& cfg, const std::string& language, int concept_id);

/// Band pattern for one phone (length feature_dim).
Eigen::VectorXd toy_phone_template(const ToyConfig& cfg, int phone);

/// Noise-free rendering of a word of `frames` frames (frames x feature_dim).
Eigen::MatrixXd toy_render_word(const ToyConfig& cfg, const std::vector<int>& spelling, int frames);

/// Concept sequence of utterance `index` in `split`.
std::vector<int> toy_concepts(const ToyConfig& cfg, Split split, int index);

/// Visual-tagger stand-in.  `present` holds keyword indices.
SupervisionTarget synth_visual_tags(const std::set<std::size_t>& present, std::size_t vocab_size,
                                    const ToyConfig& cfg, Rng& rng);

/// Writes manifest.jsonl, vocabulary.txt, manifest.jsonl.meta.json,
/// toy_config.json, features/ and visual_tags/ under `out_dir`.
CorpusManifest generate_toy_corpus(const ToyConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace vgskws
