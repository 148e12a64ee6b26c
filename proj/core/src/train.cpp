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

#include "vgskws/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "vgskws/error.hpp"
#include "vgskws/eval.hpp"
#include "vgskws/wav.hpp"

namespace vgskws {

namespace {

int resolve_threads(int threads, std::size_t work) {
  int n = threads > 0 ? threads : static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  return std::max(1, std::min<int>(n, static_cast<int>(std::max<std::size_t>(work, 1))));
}

// Runs fn(worker, i) for i in [0, n); worker k handles i = k, k + workers, ...
template <typename Fn>
void for_each_strided(std::size_t n, int workers, Fn fn) {
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(0, i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int k = 0; k < workers; ++k) {
    pool.emplace_back([&, k] {
      try {
        for (std::size_t i = static_cast<std::size_t>(k); i < n; i += static_cast<std::size_t>(workers)) fn(k, i);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

FeatureSequence load_record_features(const UtteranceRecord& rec) {
  if (rec.features) return read_features(*rec.features);
  if (rec.audio) {
    const Waveform wav = read_wav(*rec.audio);
    return compute_mfcc(wav.samples, wav.sample_rate);
  }
  throw IoError("train", "record '" + rec.id + "' has neither audio nor features");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train: lr must be > 0");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(selection_theta >= 0.0 && selection_theta <= 1.0)) throw ConfigError("train: selection_theta must lie in [0, 1]");
  if (threads < 0) throw ConfigError("train: threads must be >= 0");
  if (spec_augment.time_warp) throw ConfigError("train: SpecAugment time warping is not supported");
  if (spec_augment.num_freq_masks < 0 || spec_augment.num_freq_masks > 2 || spec_augment.num_time_masks < 0 ||
      spec_augment.num_time_masks > 2)
    throw ConfigError("train: SpecAugment allows at most two masks per axis");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"lr", c.lr},
                     {"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"kind", to_string(c.kind)},
                     {"selection_theta", c.selection_theta},
                     {"augment", c.augment},
                     {"spec_augment",
                      {{"num_freq_masks", c.spec_augment.num_freq_masks},
                       {"max_freq_width", c.spec_augment.max_freq_width},
                       {"num_time_masks", c.spec_augment.num_time_masks},
                       {"max_time_fraction", c.spec_augment.max_time_fraction},
                       {"time_warp", c.spec_augment.time_warp}}},
                     {"seed", c.seed},
                     {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (j.contains("lr")) j.at("lr").get_to(c.lr);
  if (j.contains("epochs")) j.at("epochs").get_to(c.epochs);
  if (j.contains("batch_size")) j.at("batch_size").get_to(c.batch_size);
  if (j.contains("kind")) c.kind = parse_target_kind(j.at("kind").get<std::string>());
  if (j.contains("selection_theta")) j.at("selection_theta").get_to(c.selection_theta);
  if (j.contains("augment")) j.at("augment").get_to(c.augment);
  if (j.contains("spec_augment")) {
    const auto& s = j.at("spec_augment");
    if (s.contains("num_freq_masks")) s.at("num_freq_masks").get_to(c.spec_augment.num_freq_masks);
    if (s.contains("max_freq_width")) s.at("max_freq_width").get_to(c.spec_augment.max_freq_width);
    if (s.contains("num_time_masks")) s.at("num_time_masks").get_to(c.spec_augment.num_time_masks);
    if (s.contains("max_time_fraction")) s.at("max_time_fraction").get_to(c.spec_augment.max_time_fraction);
    if (s.contains("time_warp")) s.at("time_warp").get_to(c.spec_augment.time_warp);
  }
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("threads")) j.at("threads").get_to(c.threads);
}

double bce_loss(const Eigen::VectorXd& y_hat, const Eigen::VectorXd& target) {
  if (y_hat.size() != target.size())
    throw ShapeError("train", "prediction length " + std::to_string(y_hat.size()) + " != target length " +
                                  std::to_string(target.size()));
  if (y_hat.size() == 0) throw ShapeError("train", "empty prediction");
  double sum = 0.0;
  for (Eigen::Index w = 0; w < y_hat.size(); ++w) {
    const double p = std::clamp(y_hat[w], 1e-7, 1.0 - 1e-7);
    sum -= target[w] * std::log(p) + (1.0 - target[w]) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(y_hat.size());
}

AdamOptimizer::AdamOptimizer(const nn::ParameterStore& params, double lr)
    : lr_(lr), m_(params.zeros_like()), v_(params.zeros_like()) {}

void AdamOptimizer::step(nn::ParameterStore& params, const nn::Gradients& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseProduct(grads[i]);
    params[i].array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

std::vector<Example> load_examples(const CorpusManifest& corpus, Split split, TargetKind kind, bool require_targets) {
  std::vector<Example> out;
  for (const UtteranceRecord* rec : corpus.split(split)) {
    Example ex;
    ex.id = rec->id;
    ex.features = load_record_features(*rec);
    ex.presence = corpus.presence(*rec);
    if (require_targets) {
      ex.target = resolve_target(*rec, corpus.vocabulary, kind).probs;
    } else {
      try {
        ex.target = resolve_target(*rec, corpus.vocabulary, kind).probs;
      } catch (const Error&) {
        ex.target.resize(0);
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

double batch_gradient(const Model& model, std::span<const FeatureSequence* const> features,
                      std::span<const Eigen::VectorXd* const> targets, nn::Gradients& grads, int threads) {
  if (features.size() != targets.size()) throw ShapeError("train", "batch features and targets differ in length");
  if (features.empty()) throw ShapeError("train", "empty batch");
  const auto F = static_cast<Eigen::Index>(model.config().feature_dim);
  Eigen::Index longest = 0;
  for (const auto* f : features) longest = std::max(longest, f->frames());
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(F, longest);

  const int workers = resolve_threads(threads, features.size());
  std::vector<nn::Gradients> partial(static_cast<std::size_t>(workers), model.params().zeros_like());
  std::vector<double> losses(features.size(), 0.0);
  std::vector<Eigen::MatrixXd> inputs(static_cast<std::size_t>(workers), padded);
  for_each_strided(features.size(), workers, [&](int k, std::size_t i) {
    const FeatureSequence& f = *features[i];
    if (f.dims() != F)
      throw ShapeError("train", "feature dimension " + std::to_string(f.dims()) + " does not match model input " +
                                    std::to_string(F));
    auto& x = inputs[static_cast<std::size_t>(k)];
    x.setZero();
    x.leftCols(f.frames()) = f.values.transpose();
    losses[i] = model.loss_and_gradient(x, f.frames(), *targets[i], partial[static_cast<std::size_t>(k)]);
  });
  grads = std::move(partial[0]);
  for (std::size_t k = 1; k < partial.size(); ++k) nn::add_into(grads, partial[k]);
  const double inv = 1.0 / static_cast<double>(features.size());
  nn::scale(grads, inv);
  double loss = 0.0;
  for (double l : losses) loss += l;
  return loss * inv;
}

Eigen::MatrixXd predict(const Model& model, std::span<const Example> examples, int threads) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(examples.size()), model.config().vocab_size);
  const int workers = resolve_threads(threads, examples.size());
  for_each_strided(examples.size(), workers, [&](int, std::size_t i) {
    out.row(static_cast<Eigen::Index>(i)) = model.forward(examples[i].features).y_hat.transpose();
  });
  return out;
}

namespace {

double dev_macro_f1(const Model& model, std::span<const Example> dev, double theta, int threads) {
  const Eigen::MatrixXd scores = predict(model, dev, threads);
  BoolMatrix presence(scores.rows(), scores.cols());
  for (std::size_t n = 0; n < dev.size(); ++n) {
    for (Eigen::Index w = 0; w < scores.cols(); ++w)
      presence(static_cast<Eigen::Index>(n), w) = dev[n].presence.at(static_cast<std::size_t>(w));
  }
  const auto result = eval_detection(scores, presence, theta);
  return result.macro.f1_strict.value_or(0.0);
}

}  // namespace

TrainResult train(Model model, std::span<const Example> train_set, std::span<const Example> dev_set,
                  const TrainConfig& cfg, const std::function<void(const TrainLogEntry&)>& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw Error("train", "empty train split");
  const auto V = static_cast<Eigen::Index>(model.config().vocab_size);
  for (const auto& ex : train_set) {
    if (ex.target.size() != V)
      throw ShapeError("train", "record '" + ex.id + "' has no " + to_string(cfg.kind) + " target of length " +
                                    std::to_string(V));
  }

  AdamOptimizer adam(model.params(), cfg.lr);
  Rng shuffle_rng = SeedSequence(cfg.seed).with("shuffle").rng();
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result{model, 0, -1.0, {}};
  const auto start = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i-- > 1;) {
      const auto j = static_cast<std::size_t>(uniform_int(shuffle_rng, 0, static_cast<int>(i)));
      std::swap(order[i], order[j]);
    }
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      std::vector<FeatureSequence> augmented;
      augmented.reserve(e - b);
      std::vector<const FeatureSequence*> feats;
      std::vector<const Eigen::VectorXd*> targets;
      for (std::size_t k = b; k < e; ++k) {
        const Example& ex = train_set[order[k]];
        if (cfg.augment) {
          Rng rng = SeedSequence(cfg.seed).with("augment").with(static_cast<std::uint64_t>(epoch)).with(order[k]).rng();
          augmented.push_back(spec_augment(ex.features, cfg.spec_augment, rng));
          feats.push_back(&augmented.back());
        } else {
          feats.push_back(&ex.features);
        }
        targets.push_back(&ex.target);
      }
      nn::Gradients grads;
      const double loss = batch_gradient(model, feats, targets, grads, cfg.threads);
      loss_sum += loss * static_cast<double>(e - b);
      adam.step(model.params(), grads);
    }

    TrainLogEntry entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(order.size());
    entry.dev_f1 = dev_set.empty() ? 0.0 : dev_macro_f1(model, dev_set, cfg.selection_theta, cfg.threads);
    entry.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(entry);
    if (entry.dev_f1 > result.best_dev_f1 || (dev_set.empty() && epoch == cfg.epochs)) {
      result.best_dev_f1 = entry.dev_f1;
      result.best_epoch = epoch;
      result.model = model;
    }
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

TrainResult train(Model model, const CorpusManifest& corpus, const TrainConfig& cfg,
                  const std::function<void(const TrainLogEntry&)>& on_epoch) {
  cfg.validate();
  const auto train_set = load_examples(corpus, Split::kTrain, cfg.kind, true);
  if (train_set.empty()) throw Error("train", "empty train split");
  const auto dev_set = load_examples(corpus, Split::kDev, cfg.kind, false);
  return train(std::move(model), train_set, dev_set, cfg, on_epoch);
}

void write_train_log(const std::vector<TrainLogEntry>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("train", "cannot write " + path.string());
  for (const auto& e : log) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["dev_f1"] = e.dev_f1;
    j["wall_s"] = e.wall_s;
    out << j.dump() << '\n';
  }
}

}  // namespace vgskws
