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

#include "vgskws/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vgskws/error.hpp"
#include "vgskws/features.hpp"
#include "vgskws/hash.hpp"
#include "vgskws/textgrid.hpp"
#include "vgskws/wav.hpp"

namespace vgskws {

namespace fs = std::filesystem;
using nlohmann::json;

std::string case_fold(std::string_view word) {
  std::string out(word);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> keywords, std::string language_tag)
    : keywords_(std::move(keywords)), language_(std::move(language_tag)) {
  for (std::size_t i = 0; i < keywords_.size(); ++i) lookup_.emplace(case_fold(keywords_[i]), i);
}

std::optional<std::size_t> Vocabulary::find(std::string_view word) const {
  auto it = lookup_.find(case_fold(word));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::index(std::string_view word) const {
  if (auto w = find(word)) return *w;
  throw VocabularyError("unknown keyword '" + std::string(word) + "'");
}

std::string Vocabulary::hash() const {
  std::string joined;
  for (const auto& k : keywords_) {
    joined += k;
    joined += '\n';
  }
  return to_hex(fnv1a64(joined));
}

Vocabulary build_vocabulary(const std::vector<std::string>& words, const std::string& language_tag) {
  if (words.empty()) throw VocabularyError("vocabulary is empty");
  std::set<std::string> seen;
  for (const auto& w : words) {
    if (w.empty()) throw VocabularyError("empty keyword");
    if (!seen.insert(case_fold(w)).second) throw VocabularyError("duplicate keyword '" + w + "'");
  }
  return Vocabulary(words, language_tag);
}

Vocabulary load_vocabulary_file(const fs::path& path, const std::string& language_tag) {
  std::ifstream in(path);
  if (!in) throw IoError("vocabulary", "cannot open " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    std::size_t lead = 0;
    while (lead < line.size() && (line[lead] == ' ' || line[lead] == '\t')) ++lead;
    if (lead < line.size()) words.push_back(line.substr(lead));
  }
  return build_vocabulary(words, language_tag);
}

void save_vocabulary_file(const Vocabulary& vocab, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("vocabulary", "cannot write " + path.string());
  for (const auto& k : vocab.keywords()) out << k << '\n';
}

const std::vector<std::string>& flickr_keywords() {
  static const std::vector<std::string> words = {
      "air",      "baby",     "ball",     "beach",    "bike",       "black",    "boy",
      "brown",    "building", "camera",   "car",      "carrying",   "children", "climbing",
      "dirt",     "dogs",     "face",     "field",    "football",   "grass",    "hair",
      "hat",      "holding",  "jacket",   "jumps",    "large",      "little",   "mountain",
      "mouth",    "ocean",    "orange",   "park",     "pink",       "pool",     "race",
      "red",      "rides",    "riding",   "road",     "rock",       "running",  "sand",
      "shirt",    "sits",     "sitting",  "skateboard", "small",    "smiling",  "snow",
      "snowy",    "soccer",   "stands",   "stick",    "street",     "swimming", "tennis",
      "three",    "top",      "toy",      "tree",     "walks",      "water",    "wearing",
      "white",    "women",    "yellow",   "young"};
  return words;
}

std::vector<AlignmentEntry> AlignmentSet::occurrences(std::string_view keyword) const {
  const std::string key = case_fold(keyword);
  std::vector<AlignmentEntry> out;
  for (const auto& e : entries) {
    if (case_fold(e.word) == key) out.push_back(e);
  }
  return out;
}

void validate_alignment(const AlignmentSet& alignment, std::optional<double> duration_s,
                        const std::string& context) {
  // Alignment tools round boundaries; allow one 10 ms frame of slack.
  constexpr double kSlack = 0.010 + 1e-9;
  for (const auto& e : alignment.entries) {
    if (!(e.start_s >= 0.0) || !(e.start_s < e.end_s)) {
      throw RangeError("corpus", context + ": invalid interval for '" + e.word + "' [" +
                                     std::to_string(e.start_s) + ", " + std::to_string(e.end_s) + "]");
    }
    if (duration_s && e.end_s > *duration_s + kSlack) {
      throw RangeError("corpus", context + ": interval for '" + e.word + "' ends at " +
                                     std::to_string(e.end_s) + " s beyond duration " +
                                     std::to_string(*duration_s) + " s");
    }
  }
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "dev" || text == "val" || text == "validation") return Split::kDev;
  if (text == "test") return Split::kTest;
  throw ConfigError("unknown split '" + std::string(text) + "'");
}

std::vector<const UtteranceRecord*> CorpusManifest::split(Split s) const {
  std::vector<const UtteranceRecord*> out;
  for (const auto& r : records) {
    if (r.split == s) out.push_back(&r);
  }
  return out;
}

const UtteranceRecord& CorpusManifest::record(std::string_view id) const {
  for (const auto& r : records) {
    if (r.id == id) return r;
  }
  throw Error("corpus", "no record with id '" + std::string(id) + "'");
}

std::vector<bool> CorpusManifest::presence(const UtteranceRecord& record) const {
  std::vector<bool> present(vocabulary.size(), false);
  if (record.transcript) {
    for (const auto& tok : *record.transcript) {
      if (auto w = vocabulary.find(tok)) present[*w] = true;
    }
  } else if (record.alignment) {
    for (const auto& e : record.alignment->entries) {
      if (auto w = vocabulary.find(e.word)) present[*w] = true;
    }
  }
  return present;
}

void CorpusManifest::compute_occurrence_counts() {
  for (auto& c : occurrence_counts) c.assign(vocabulary.size(), 0);
  for (const auto& r : records) {
    const auto present = presence(r);
    auto& counts = occurrence_counts[static_cast<std::size_t>(r.split)];
    for (std::size_t w = 0; w < present.size(); ++w) counts[w] += present[w] ? 1 : 0;
  }
}

namespace {

fs::path resolve(const fs::path& base_dir, const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) path = base_dir / path;
  return path.lexically_normal();
}

std::string relative_if_beneath(const fs::path& p, const fs::path& base_dir) {
  const fs::path rel = p.lexically_relative(base_dir);
  if (rel.empty() || *rel.begin() == "..") return p.generic_string();
  return rel.generic_string();
}

AlignmentSet alignment_from_json_array(const json& arr, const std::string& context) {
  if (!arr.is_array()) throw Error("corpus", context + ": alignment must be an array");
  AlignmentSet out;
  for (const auto& e : arr) {
    out.entries.push_back({e.at("word").get<std::string>(), e.at("start_s").get<double>(),
                           e.at("end_s").get<double>()});
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
  return out;
}

bool has_extension(const fs::path& p, std::string_view ext) {
  return case_fold(p.extension().string()) == ext;
}

struct Meta {
  std::optional<std::string> audio_language;
  std::optional<std::string> query_language;
};

Meta read_meta(const fs::path& manifest_path) {
  Meta meta;
  const fs::path p = manifest_path.string() + ".meta.json";
  if (!fs::exists(p)) return meta;
  std::ifstream in(p);
  json j = json::parse(in, nullptr, true);
  if (j.contains("audio_language")) meta.audio_language = j["audio_language"].get<std::string>();
  if (j.contains("query_language")) meta.query_language = j["query_language"].get<std::string>();
  return meta;
}

}  // namespace

AlignmentSet parse_alignment_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("corpus", "cannot open alignment " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  return alignment_from_json_array(j, path.string());
}

CorpusManifest load_manifest(const fs::path& path, const ManifestLoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("corpus", "cannot open manifest " + path.string());
  const fs::path base_dir = path.parent_path();
  const Meta meta = read_meta(path);

  CorpusManifest manifest;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string file = path.string();
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(file, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(file, line_no, "record is not an object");

    UtteranceRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      const bool has_audio = j.contains("audio") && !j["audio"].is_null();
      const bool has_features = j.contains("features") && !j["features"].is_null();
      if (has_audio == has_features)
        throw ParseError(file, line_no, "exactly one of \"audio\" or \"features\" is required");
      if (has_audio) r.audio = resolve(base_dir, j["audio"].get<std::string>());
      if (has_features) r.features = resolve(base_dir, j["features"].get<std::string>());
      if (j.contains("transcript") && !j["transcript"].is_null())
        r.transcript = j["transcript"].get<std::vector<std::string>>();
      r.language = j.at("language").get<std::string>();
      r.split = parse_split(j.at("split").get<std::string>());
      if (j.contains("visual_tags") && !j["visual_tags"].is_null())
        r.visual_tags = resolve(base_dir, j["visual_tags"].get<std::string>());

      if (r.features && fs::exists(*r.features)) {
        const auto h = read_feature_header(*r.features);
        r.duration_s = h.frames * h.frame_hop_s;
      } else if (r.audio && fs::exists(*r.audio)) {
        r.duration_s = wav_duration_s(*r.audio);
      }

      if (j.contains("alignment") && !j["alignment"].is_null()) {
        const json& a = j["alignment"];
        if (a.is_array()) {
          r.alignment = alignment_from_json_array(a, r.id);
        } else {
          const fs::path ap = resolve(base_dir, a.get<std::string>());
          if (has_extension(ap, ".textgrid"))
            r.alignment = parse_textgrid(ap, options.textgrid_tier);
          else
            r.alignment = parse_alignment_json(ap);
        }
        validate_alignment(*r.alignment, r.duration_s, r.id);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const json::exception& e) {
      throw ParseError(file, line_no, e.what());
    } catch (const Error& e) {
      throw ParseError(file, line_no, e.what());
    }

    if (!ids.insert(r.id).second) throw DuplicateIdError(r.id);
    if (options.require_test_alignments && r.split == Split::kTest && !r.alignment)
      throw MissingAlignmentError(r.id, "test records need alignments for localisation");
    manifest.records.push_back(std::move(r));
  }

  manifest.audio_language = meta.audio_language.value_or(
      manifest.records.empty() ? std::string() : manifest.records.front().language);
  manifest.query_language =
      options.query_language.value_or(meta.query_language.value_or(manifest.audio_language));
  const fs::path vocab_path = options.vocabulary_path.value_or(base_dir / "vocabulary.txt");
  manifest.vocabulary = load_vocabulary_file(vocab_path, manifest.query_language);
  manifest.compute_occurrence_counts();
  return manifest;
}

void save_manifest(const CorpusManifest& manifest, const fs::path& path) {
  const fs::path base_dir = path.parent_path();
  if (!base_dir.empty()) fs::create_directories(base_dir);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("corpus", "cannot write " + path.string());
  for (const auto& r : manifest.records) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    if (r.audio) j["audio"] = relative_if_beneath(*r.audio, base_dir);
    if (r.features) j["features"] = relative_if_beneath(*r.features, base_dir);
    j["transcript"] = r.transcript ? nlohmann::ordered_json(*r.transcript) : nlohmann::ordered_json();
    j["language"] = r.language;
    j["split"] = std::string(to_string(r.split));
    if (r.alignment) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& e : r.alignment->entries)
        arr.push_back({{"word", e.word}, {"start_s", e.start_s}, {"end_s", e.end_s}});
      j["alignment"] = arr;
    } else {
      j["alignment"] = nullptr;
    }
    j["visual_tags"] = r.visual_tags ? nlohmann::ordered_json(relative_if_beneath(*r.visual_tags, base_dir))
                                     : nlohmann::ordered_json();
    out << j.dump() << '\n';
  }
  save_vocabulary_file(manifest.vocabulary, base_dir / "vocabulary.txt");
  std::ofstream meta(path.string() + ".meta.json", std::ios::binary);
  nlohmann::ordered_json m;
  m["audio_language"] = manifest.audio_language;
  m["query_language"] = manifest.query_language;
  meta << m.dump(2) << '\n';
}

}  // namespace vgskws
