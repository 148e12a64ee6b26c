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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "vgskws/corpus.hpp"
#include "vgskws/features.hpp"
#include "vgskws/model.hpp"
#include "vgskws/supervision.hpp"

namespace vgskws {

struct TrainConfig {
  double lr = 1e-4;
  int epochs = 100;
  int batch_size = 32;
  TargetKind kind = TargetKind::kBow;
  double selection_theta = 0.5;  // dev detection F1 threshold
  bool augment = true;
  SpecAugmentConfig spec_augment;
  std::uint64_t seed = 1;
  /// Worker threads for per-utterance gradients.  Results are reproducible
  /// for a fixed value; 0 picks the hardware concurrency.
  int threads = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

/// Cross-entropy averaged over keywords; probabilities are clamped to
/// [1e-7, 1 - 1e-7].  Throws ShapeError on length mismatch.
double bce_loss(const Eigen::VectorXd& y_hat, const Eigen::VectorXd& target);

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8).
class AdamOptimizer {
 public:
  AdamOptimizer(const nn::ParameterStore& params, double lr);
  void step(nn::ParameterStore& params, const nn::Gradients& grads);
  long steps() const { return t_; }

 private:
  double lr_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  nn::Gradients m_;
  nn::Gradients v_;
};

/// One utterance ready for training or inference.
struct Example {
  std::string id;
  FeatureSequence features;
  Eigen::VectorXd target;
  std::vector<bool> presence;
};

/// Reads the feature file, or computes MFCCs from the audio file.
FeatureSequence load_record_features(const UtteranceRecord& record);

/// Features plus targets of `kind` for every record in `split`.  Test/dev
/// records without a target source still load (target left empty) when
/// `require_targets` is false.
std::vector<Example> load_examples(const CorpusManifest& corpus, Split split, TargetKind kind,
                                   bool require_targets = true);

/// Zero-pads the batch to its longest utterance and returns the mean loss;
/// `grads` receives the batch-mean gradient.
double batch_gradient(const Model& model, std::span<const FeatureSequence* const> features,
                      std::span<const Eigen::VectorXd* const> targets, nn::Gradients& grads,
                      int threads);

/// Detection probabilities (N x V) for a list of examples.
Eigen::MatrixXd predict(const Model& model, std::span<const Example> examples, int threads);

struct TrainLogEntry {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_f1 = 0.0;
  double wall_s = 0.0;
};

struct TrainResult {
  Model model;  // parameters of the best dev epoch
  int best_epoch = 0;
  double best_dev_f1 = 0.0;
  std::vector<TrainLogEntry> log;
};

/// Adam over shuffled mini-batches for cfg.epochs; after each epoch the dev
/// strict macro detection F1 at cfg.selection_theta is computed and the best epoch
/// (earliest on ties) is returned.
TrainResult train(Model model, const CorpusManifest& corpus, const TrainConfig& cfg,
                  const std::function<void(const TrainLogEntry&)>& on_epoch = {});

/// Same, over preloaded examples.
TrainResult train(Model model, std::span<const Example> train_set, std::span<const Example> dev_set,
                  const TrainConfig& cfg,
                  const std::function<void(const TrainLogEntry&)>& on_epoch = {});

struct CheckpointMeta {
  ModelConfig model;
  std::string vocabulary_hash;
  std::uint64_t seed = 0;
  int epoch = 0;
  double dev_metric = 0.0;
};

struct Checkpoint {
  Model model;
  CheckpointMeta meta;
};

/// Writes `<base>.bin` (parameter blob) and `<base>.json` (sidecar).
void save_checkpoint(const Model& model, const CheckpointMeta& meta, const std::filesystem::path& base);
Checkpoint load_checkpoint(const std::filesystem::path& base);

enum class WarmStartMode { kAll, kEncoderOnly };
WarmStartMode parse_warm_start_mode(const std::string& text);

/// Copies checkpoint parameters into `model`.  kAll requires identical
/// architecture, shapes, and vocabulary hash; kEncoderOnly copies "enc.*"
/// tensors and requires matching encoder shapes.  Throws ShapeError or
/// VocabularyError.
Model warm_start(Model model, const Checkpoint& checkpoint, WarmStartMode mode,
                 const std::string& vocabulary_hash);

void write_train_log(const std::vector<TrainLogEntry>& log, const std::filesystem::path& path);

}  // namespace vgskws
