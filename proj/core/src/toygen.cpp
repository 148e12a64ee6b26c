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

#include "vgskws/toygen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "vgskws/error.hpp"
#include "vgskws/features.hpp"

namespace vgskws {

namespace fs = std::filesystem;
using nlohmann::json;

void ToyConfig::validate() const {
  auto range_ok = [](const std::pair<int, int>& r, int lo) { return r.first >= lo && r.first <= r.second; };
  if (vocab_size < 1) throw ConfigError("toy: vocab_size must be >= 1");
  if (num_fillers < 0) throw ConfigError("toy: num_fillers must be >= 0");
  if (n_train < 0 || n_dev < 0 || n_test < 0) throw ConfigError("toy: split sizes must be >= 0");
  if (!range_ok(words_per_utt, 1)) throw ConfigError("toy: words_per_utt must satisfy 1 <= min <= max");
  if (!range_ok(word_dur_frames, 1)) throw ConfigError("toy: word_dur_frames must satisfy 1 <= min <= max");
  if (!range_ok(silence_frames, 1)) throw ConfigError("toy: silence_frames must satisfy 1 <= min <= max");
  if (!range_ok(phones_per_word, 1)) throw ConfigError("toy: phones_per_word must satisfy 1 <= min <= max");
  if (phones_per_word.second > word_dur_frames.first)
    throw ConfigError("toy: every phone needs at least one frame (phones_per_word.max <= word_dur_frames.min)");
  if (feature_dim < 4) throw ConfigError("toy: feature_dim must be >= 4");
  if (num_phones < 2) throw ConfigError("toy: num_phones must be >= 2");
  if (!(hit_mean > 0.0 && hit_mean <= 1.0)) throw ConfigError("toy: hit_mean must be in (0, 1]");
  if (!(false_alarm_rate >= 0.0 && false_alarm_rate < 1.0)) throw ConfigError("toy: false_alarm_rate must be in [0, 1)");
  if (hit_spread < 0.0) throw ConfigError("toy: hit_spread must be >= 0");
  if (silence_prob < 0.0 || silence_prob > 1.0) throw ConfigError("toy: silence_prob must be in [0, 1]");
  if (frame_noise < 0.0 || silence_noise < 0.0) throw ConfigError("toy: noise levels must be >= 0");
  // Distinct spellings: count sequences without immediate phone repeats.
  double capacity = 0.0;
  for (int len = phones_per_word.first; len <= phones_per_word.second; ++len)
    capacity += num_phones * std::pow(num_phones - 1, len - 1);
  if (capacity < vocab_size + num_fillers) throw ConfigError("toy: too few phone sequences for the lexicon");
}

void to_json(json& j, const ToyConfig& c) {
  j = json{{"vocab_size", c.vocab_size},
           {"num_fillers", c.num_fillers},
           {"n_train", c.n_train},
           {"n_dev", c.n_dev},
           {"n_test", c.n_test},
           {"words_per_utt", {c.words_per_utt.first, c.words_per_utt.second}},
           {"word_dur_frames", {c.word_dur_frames.first, c.word_dur_frames.second}},
           {"feature_dim", c.feature_dim},
           {"num_phones", c.num_phones},
           {"phones_per_word", {c.phones_per_word.first, c.phones_per_word.second}},
           {"silence_prob", c.silence_prob},
           {"silence_frames", {c.silence_frames.first, c.silence_frames.second}},
           {"frame_noise", c.frame_noise},
           {"silence_noise", c.silence_noise},
           {"hit_mean", c.hit_mean},
           {"hit_spread", c.hit_spread},
           {"false_alarm_rate", c.false_alarm_rate},
           {"audio_language", c.audio_language},
           {"query_language", c.query_language},
           {"seed", c.seed}};
}

void from_json(const json& j, ToyConfig& c) {
  auto pair = [&](const char* key, std::pair<int, int>& dst) {
    if (j.contains(key)) {
      const auto v = j.at(key).get<std::vector<int>>();
      if (v.size() != 2) throw ConfigError(std::string("toy: ") + key + " must be [min, max]");
      dst = {v[0], v[1]};
    }
  };
  auto opt = [&](const char* key, auto& dst) {
    if (j.contains(key)) j.at(key).get_to(dst);
  };
  opt("vocab_size", c.vocab_size);
  opt("num_fillers", c.num_fillers);
  opt("n_train", c.n_train);
  opt("n_dev", c.n_dev);
  opt("n_test", c.n_test);
  pair("words_per_utt", c.words_per_utt);
  pair("word_dur_frames", c.word_dur_frames);
  opt("feature_dim", c.feature_dim);
  opt("num_phones", c.num_phones);
  pair("phones_per_word", c.phones_per_word);
  opt("silence_prob", c.silence_prob);
  pair("silence_frames", c.silence_frames);
  opt("frame_noise", c.frame_noise);
  opt("silence_noise", c.silence_noise);
  opt("hit_mean", c.hit_mean);
  opt("hit_spread", c.hit_spread);
  opt("false_alarm_rate", c.false_alarm_rate);
  opt("audio_language", c.audio_language);
  opt("query_language", c.query_language);
  opt("seed", c.seed);
}

std::vector<std::string> toy_keywords(const std::string& language, int count) {
  std::vector<std::string> out;
  if (language == "en") {
    const auto& flickr = flickr_keywords();
    for (int i = 0; i < count; ++i)
      out.push_back(i < static_cast<int>(flickr.size()) ? flickr[static_cast<std::size_t>(i)] : "kw" + std::to_string(i));
    return out;
  }
  static const char* kSyllables[] = {"ba", "ko", "mi", "tu", "ra", "se", "lo", "nu",
                                     "de", "fa", "gi", "wo", "ye", "ji", "pe", "sho"};
  std::set<std::string> used;
  for (int i = 0; i < count; ++i) {
    Rng rng = SeedSequence(0x1e81c0).with(language).with(static_cast<std::uint64_t>(i)).rng();
    std::string word;
    const int n = uniform_int(rng, 2, 3);
    for (int s = 0; s < n; ++s) word += kSyllables[uniform_int(rng, 0, 15)];
    if (!used.insert(word).second) {
      word += std::to_string(i);
      used.insert(word);
    }
    out.push_back(word);
  }
  return out;
}

std::string toy_filler(const std::string& language, int i) {
  return (language == "en" ? std::string("filler") : language + "_filler") + std::to_string(i);
}

namespace {

std::vector<std::vector<int>> toy_lexicon(const ToyConfig& cfg, const std::string& language) {
  const int total = cfg.vocab_size + cfg.num_fillers;
  std::vector<std::vector<int>> lexicon;
  std::set<std::vector<int>> used;
  Rng rng = SeedSequence(0x1e71c0).with(language).with(static_cast<std::uint64_t>(cfg.num_phones)).rng();
  while (static_cast<int>(lexicon.size()) < total) {
    const int len = uniform_int(rng, cfg.phones_per_word.first, cfg.phones_per_word.second);
    std::vector<int> spelling;
    for (int k = 0; k < len; ++k) {
      int p;
      do {
        p = uniform_int(rng, 0, cfg.num_phones - 1);
      } while (!spelling.empty() && p == spelling.back());
      spelling.push_back(p);
    }
    if (used.insert(spelling).second) lexicon.push_back(std::move(spelling));
  }
  return lexicon;
}

std::string utterance_id(Split split, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05d", std::string(to_string(split)).c_str(), index);
  return buf;
}

}  // namespace

std::vector<int> toy_spelling(const ToyConfig& cfg, const std::string& language, int concept_id) {
  const auto lexicon = toy_lexicon(cfg, language);
  return lexicon.at(static_cast<std::size_t>(concept_id));
}

Eigen::VectorXd toy_phone_template(const ToyConfig& cfg, int phone) {
  // Two Gaussian bands per phone; band centres are spread over the feature
  // axis by a low-discrepancy sequence so templates stay distinct.
  const int F = cfg.feature_dim;
  const double golden = 0.6180339887498949;
  const double c1 = std::fmod(0.5 + phone * golden, 1.0) * (F - 1);
  const double c2 = std::fmod(0.25 + phone * golden * golden * 3.0, 1.0) * (F - 1);
  Eigen::VectorXd t(F);
  for (int d = 0; d < F; ++d) {
    const double a = (d - c1) / 1.5;
    const double b = (d - c2) / 2.5;
    t[d] = 2.5 * std::exp(-0.5 * a * a) + 1.5 * std::exp(-0.5 * b * b) - 0.4;
  }
  return t;
}

Eigen::MatrixXd toy_render_word(const ToyConfig& cfg, const std::vector<int>& spelling, int frames) {
  Eigen::MatrixXd out(frames, cfg.feature_dim);
  const int n = static_cast<int>(spelling.size());
  for (int k = 0; k < n; ++k) {
    const int begin = k * frames / n;
    const int end = (k + 1) * frames / n;
    const Eigen::RowVectorXd tmpl = toy_phone_template(cfg, spelling[static_cast<std::size_t>(k)]).transpose();
    for (int t = begin; t < end; ++t) out.row(t) = tmpl;
  }
  return out;
}

std::vector<int> toy_concepts(const ToyConfig& cfg, Split split, int index) {
  Rng rng = SeedSequence(cfg.seed).with("content").with(static_cast<std::uint64_t>(split))
                .with(static_cast<std::uint64_t>(index)).rng();
  const int n = uniform_int(rng, cfg.words_per_utt.first, cfg.words_per_utt.second);
  std::vector<int> concepts;
  for (int i = 0; i < n; ++i) concepts.push_back(uniform_int(rng, 0, cfg.vocab_size + cfg.num_fillers - 1));
  return concepts;
}

SupervisionTarget synth_visual_tags(const std::set<std::size_t>& present, std::size_t vocab_size,
                                    const ToyConfig& cfg, Rng& rng) {
  for (std::size_t w : present) {
    if (w >= vocab_size) throw VocabularyError("synth_visual_tags: keyword index " + std::to_string(w) + " out of range");
  }
  auto hit = [&] { return std::clamp(cfg.hit_mean + cfg.hit_spread * (2.0 * uniform01(rng) - 1.0), 0.0, 1.0); };
  SupervisionTarget t;
  t.kind = TargetKind::kVisual;
  t.probs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab_size));
  for (std::size_t w = 0; w < vocab_size; ++w) {
    const double u = uniform01(rng);
    if (present.count(w))
      t.probs[static_cast<Eigen::Index>(w)] = hit();
    else if (u < cfg.false_alarm_rate)
      t.probs[static_cast<Eigen::Index>(w)] = hit();
  }
  return t;
}

CorpusManifest generate_toy_corpus(const ToyConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir / "features");
  fs::create_directories(out_dir / "visual_tags");

  const auto keywords = toy_keywords(cfg.query_language, cfg.vocab_size);
  const auto lexicon = toy_lexicon(cfg, cfg.audio_language);
  std::vector<Eigen::VectorXd> templates;
  for (int p = 0; p < cfg.num_phones; ++p) templates.push_back(toy_phone_template(cfg, p));

  CorpusManifest manifest;
  manifest.vocabulary = build_vocabulary(keywords, cfg.query_language);
  manifest.audio_language = cfg.audio_language;
  manifest.query_language = cfg.query_language;

  const std::pair<Split, int> splits[] = {{Split::kTrain, cfg.n_train}, {Split::kDev, cfg.n_dev}, {Split::kTest, cfg.n_test}};
  for (const auto& [split, count] : splits) {
    for (int i = 0; i < count; ++i) {
      const std::string id = utterance_id(split, i);
      const auto concepts = toy_concepts(cfg, split, i);
      Rng audio = SeedSequence(cfg.seed).with("audio").with(cfg.audio_language)
                      .with(static_cast<std::uint64_t>(split)).with(static_cast<std::uint64_t>(i)).rng();

      std::vector<Eigen::RowVectorXd> frames;
      AlignmentSet alignment;
      std::vector<std::string> transcript;
      std::set<std::size_t> present;
      for (std::size_t k = 0; k < concepts.size(); ++k) {
        if (k > 0 && uniform01(audio) < cfg.silence_prob) {
          const int n = uniform_int(audio, cfg.silence_frames.first, cfg.silence_frames.second);
          for (int s = 0; s < n; ++s) {
            Eigen::RowVectorXd row(cfg.feature_dim);
            for (int d = 0; d < cfg.feature_dim; ++d) row[d] = cfg.silence_noise * standard_normal(audio);
            frames.push_back(row);
          }
        }
        const int c = concepts[k];
        const int dur = uniform_int(audio, cfg.word_dur_frames.first, cfg.word_dur_frames.second);
        const auto& spelling = lexicon[static_cast<std::size_t>(c)];
        const int start = static_cast<int>(frames.size());
        const int n = static_cast<int>(spelling.size());
        for (int t = 0; t < dur; ++t) {
          const int phone = spelling[static_cast<std::size_t>(t * n / dur)];
          Eigen::RowVectorXd row = templates[static_cast<std::size_t>(phone)].transpose();
          for (int d = 0; d < cfg.feature_dim; ++d) row[d] += cfg.frame_noise * standard_normal(audio);
          frames.push_back(row);
        }
        std::string word;
        if (c < cfg.vocab_size) {
          word = keywords[static_cast<std::size_t>(c)];
          present.insert(static_cast<std::size_t>(c));
        } else {
          word = toy_filler(cfg.query_language, c - cfg.vocab_size);
        }
        transcript.push_back(word);
        const std::string aligned = c < cfg.vocab_size ? word : toy_filler(cfg.audio_language, c - cfg.vocab_size);
        alignment.entries.push_back({aligned, start * 0.010, (start + dur) * 0.010});
      }

      FeatureSequence f;
      f.values.resize(static_cast<Eigen::Index>(frames.size()), cfg.feature_dim);
      for (std::size_t t = 0; t < frames.size(); ++t) f.values.row(static_cast<Eigen::Index>(t)) = frames[t];
      f.frame_hop_s = 0.010;
      f.frame_window_s = 0.025;
      const fs::path feat_rel = fs::path("features") / (id + ".feat");
      write_features(f, out_dir / feat_rel);

      Rng tagger = SeedSequence(cfg.seed).with("tagger").with(static_cast<std::uint64_t>(split))
                       .with(static_cast<std::uint64_t>(i)).rng();
      const auto tags = synth_visual_tags(present, keywords.size(), cfg, tagger);
      const fs::path tags_rel = fs::path("visual_tags") / (id + ".json");
      save_visual_targets(tags, manifest.vocabulary, out_dir / tags_rel);

      UtteranceRecord r;
      r.id = id;
      r.features = (out_dir / feat_rel).lexically_normal();
      r.transcript = transcript;
      r.language = cfg.audio_language;
      r.split = split;
      r.alignment = alignment;
      r.visual_tags = (out_dir / tags_rel).lexically_normal();
      r.duration_s = f.duration_s();
      manifest.records.push_back(std::move(r));
    }
  }
  manifest.compute_occurrence_counts();
  save_manifest(manifest, out_dir / "manifest.jsonl");
  std::ofstream cfg_out(out_dir / "toy_config.json", std::ios::binary);
  cfg_out << json(cfg).dump(2) << '\n';
  return manifest;
}

}  // namespace vgskws
