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

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vgskws {

/// Lower-cases ASCII letters only.  Every other byte, including UTF-8
/// sequences carrying tone marks, is compared exactly.
std::string case_fold(std::string_view word);

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> keywords, std::string language_tag);

  std::size_t size() const { return keywords_.size(); }
  const std::vector<std::string>& keywords() const { return keywords_; }
  const std::string& keyword(std::size_t w) const { return keywords_.at(w); }
  const std::string& language() const { return language_; }

  /// Index of `word` after case folding, or nullopt.
  std::optional<std::size_t> find(std::string_view word) const;
  std::size_t index(std::string_view word) const;

  /// Stable fingerprint over the ordered keyword list.
  std::string hash() const;

  bool operator==(const Vocabulary& other) const {
    return keywords_ == other.keywords_ && language_ == other.language_;
  }

 private:
  std::vector<std::string> keywords_;
  std::string language_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

/// Rejects duplicates (after case folding) and empty input; ordering is
/// the input ordering.
Vocabulary build_vocabulary(const std::vector<std::string>& words, const std::string& language_tag);

Vocabulary load_vocabulary_file(const std::filesystem::path& path, const std::string& language_tag);
void save_vocabulary_file(const Vocabulary& vocab, const std::filesystem::path& path);

/// The 67 English keyword types of the Flickr8k-based vocabulary.
const std::vector<std::string>& flickr_keywords();

struct AlignmentEntry {
  std::string word;
  double start_s = 0.0;
  double end_s = 0.0;
  bool operator==(const AlignmentEntry&) const = default;
};

struct AlignmentSet {
  std::vector<AlignmentEntry> entries;

  /// Intervals whose word matches `keyword` after case folding.
  std::vector<AlignmentEntry> occurrences(std::string_view keyword) const;
  bool operator==(const AlignmentSet&) const = default;
};

/// Throws RangeError on start < 0, start >= end, or end beyond a known
/// duration.
void validate_alignment(const AlignmentSet& alignment, std::optional<double> duration_s,
                        const std::string& context);

enum class Split { kTrain, kDev, kTest };
std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct UtteranceRecord {
  std::string id;
  std::optional<std::filesystem::path> audio;     // waveform file
  std::optional<std::filesystem::path> features;  // feature file
  std::optional<std::vector<std::string>> transcript;
  std::string language;
  Split split = Split::kTrain;
  std::optional<AlignmentSet> alignment;
  std::optional<std::filesystem::path> visual_tags;
  /// Known when the source file header was readable at load time.
  std::optional<double> duration_s;

  bool operator==(const UtteranceRecord&) const = default;
};

struct CorpusManifest {
  std::vector<UtteranceRecord> records;
  Vocabulary vocabulary;
  std::string audio_language;
  std::string query_language;
  /// counts[split][w]: number of records in the split containing keyword w.
  std::array<std::vector<std::size_t>, 3> occurrence_counts;

  std::vector<const UtteranceRecord*> split(Split s) const;
  const UtteranceRecord& record(std::string_view id) const;

  /// Keyword presence for one record: transcript when available, else the
  /// alignment words.
  std::vector<bool> presence(const UtteranceRecord& record) const;

  void compute_occurrence_counts();
};

struct ManifestLoadOptions {
  /// Defaults to `vocabulary.txt` next to the manifest.
  std::optional<std::filesystem::path> vocabulary_path;
  /// Defaults to the sidecar metadata, then to the audio language.
  std::optional<std::string> query_language;
  /// Interval tier used for TextGrid alignments.
  std::string textgrid_tier = "words";
  /// Set when localisation will be evaluated: test records need alignments.
  bool require_test_alignments = false;
};

/// Reads a JSON Lines manifest.  Relative paths resolve against the
/// manifest's directory.  Alignment references may be inline arrays, JSON
/// files, or Praat TextGrids.
CorpusManifest load_manifest(const std::filesystem::path& path,
                             const ManifestLoadOptions& options = {});

/// Writes `path`, `vocabulary.txt`, and `<path>.meta.json`.  Alignments are
/// always written inline; file paths are written relative to `path`'s
/// directory when they lie beneath it.
void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

AlignmentSet parse_alignment_json(const std::filesystem::path& path);

}  // namespace vgskws
