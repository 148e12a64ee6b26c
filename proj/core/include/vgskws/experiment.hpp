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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vgskws/corpus.hpp"
#include "vgskws/eval.hpp"
#include "vgskws/kappa.hpp"
#include "vgskws/localise.hpp"
#include "vgskws/model.hpp"
#include "vgskws/toygen.hpp"
#include "vgskws/train.hpp"

namespace vgskws {

struct CorpusSource {
  std::optional<ToyConfig> toy;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> vocabulary;
  std::optional<std::string> query_language;
  std::string textgrid_tier = "words";
};

struct WarmStartSpec {
  std::filesystem::path checkpoint;  // base path (without .bin/.json)
  WarmStartMode mode = WarmStartMode::kAll;
};

struct ExperimentConfig {
  CorpusSource corpus;
  ModelConfig model;
  TrainConfig train;
  std::vector<LocMethod> methods;
  EvalConfig eval;
  MaskedConfig masked;
  std::filesystem::path out = "out";
  std::optional<WarmStartSpec> warm_start;
  int plot_utterances = 3;

  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
void from_json(const nlohmann::json& j, ExperimentConfig& cfg);
/// Relative paths inside the file resolve against its directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Toy corpora are generated under `work_dir`/corpus; manifests are loaded.
CorpusManifest prepare_corpus(const CorpusSource& source, const std::filesystem::path& work_dir,
                              bool require_test_alignments);

/// Detection scores and localisation tracks for every record of `split`.
/// One ScoreRecord per (utterance, keyword, method); with no methods a
/// single "detection" record per pair carries the detection score only.
std::vector<ScoreRecord> localise_corpus(const Model& model, const CorpusManifest& corpus, Split split,
                                         const std::vector<LocMethod>& methods,
                                         const MaskedConfig& mcfg, int threads);

/// Rebuilds evaluation inputs from score dumps and the manifest's
/// references.  Throws Error when a dump does not cover the split.
EvalInput eval_input_from_dumps(const CorpusManifest& corpus, Split split,
                                const std::vector<ScoreRecord>& records);

/// report.json, report.csv, and the per-keyword F1 bar chart.
void write_report_artifacts(const nlohmann::ordered_json& report, const std::filesystem::path& dir);

/// Score-track plots for the first `max_utterances` utterances of the dump.
void write_track_plots(const CorpusManifest& corpus, const std::vector<ScoreRecord>& records,
                       const std::filesystem::path& dir, int max_utterances);

/// Keyword presence over one split.
PresenceTable presence_table(const CorpusManifest& corpus, Split split);

struct ExperimentResult {
  nlohmann::ordered_json report;
  TrainResult training;
};

/// Full pipeline.  Writes under cfg.out: config.json, manifest_hash.txt,
/// train_log.jsonl, checkpoint.{bin,json}, scores/<method>.jsonl,
/// report.{json,csv}, plots/*.svg.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace vgskws
