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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vgskws/corpus.hpp"
#include "vgskws/error.hpp"
#include "vgskws/eval.hpp"
#include "vgskws/experiment.hpp"
#include "vgskws/features.hpp"
#include "vgskws/kappa.hpp"
#include "vgskws/localise.hpp"
#include "vgskws/plots.hpp"
#include "vgskws/toygen.hpp"
#include "vgskws/train.hpp"
#include "vgskws/wav.hpp"

namespace fs = std::filesystem;
using namespace vgskws;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> theta;
  std::optional<std::string> methods;
  std::optional<std::string> warm_start;
  std::optional<int> epochs;
  std::optional<int> threads;
};

void add_override_flags(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "Seed for model initialisation and training");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--theta", o.theta, "Detection threshold");
  app->add_option("--methods", o.methods, "Comma-separated localisation methods");
  app->add_option("--warm-start", o.warm_start, "Checkpoint base path, optionally suffixed :all or :encoder_only");
  app->add_option("--epochs", o.epochs, "Number of training epochs");
  app->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<LocMethod> parse_methods(const std::string& s) {
  std::vector<LocMethod> out;
  for (const auto& m : split_commas(s)) out.push_back(parse_loc_method(m));
  return out;
}

ExperimentConfig apply(const Overrides& o) {
  ExperimentConfig cfg = load_experiment_config(o.config);
  if (o.seed) {
    cfg.model.seed = *o.seed;
    cfg.train.seed = *o.seed;
  }
  if (o.out) cfg.out = *o.out;
  if (o.theta) cfg.eval.theta = *o.theta;
  if (o.methods) cfg.methods = parse_methods(*o.methods);
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.threads) cfg.train.threads = *o.threads;
  if (o.warm_start) {
    WarmStartSpec w;
    std::string path = *o.warm_start;
    const auto colon = path.rfind(':');
    if (colon != std::string::npos && (path.substr(colon + 1) == "all" || path.substr(colon + 1) == "encoder_only")) {
      w.mode = parse_warm_start_mode(path.substr(colon + 1));
      path = path.substr(0, colon);
    }
    w.checkpoint = path;
    cfg.warm_start = w;
  }
  return cfg;
}

void print_summary(const nlohmann::ordered_json& report) {
  const auto show = [](const nlohmann::ordered_json& v) { return v.is_null() ? std::string("n/a") : v.dump(); };
  const auto& macro = report.at("detection").at("macro");
  std::cout << "detection macro F1: " << show(macro.at("f1")) << " (strict " << show(macro.at("f1_strict")) << ")\n";
  for (const auto& [method, mj] : report.at("localisation").items())
    std::cout << method << " oracle accuracy: " << show(mj.at("oracle").at("accuracy")) << '\n';
}

int cmd_toygen(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out) {
  ToyConfig cfg;
  if (!config.empty()) {
    std::ifstream in(config);
    if (!in) throw IoError("toygen", "cannot read " + config);
    cfg = nlohmann::json::parse(in).get<ToyConfig>();
  }
  if (seed) cfg.seed = *seed;
  const auto corpus = generate_toy_corpus(cfg, out);
  std::cout << "wrote " << corpus.records.size() << " utterances to " << (fs::path(out) / "manifest.jsonl").string()
            << '\n';
  return 0;
}

int cmd_featurize(const std::string& manifest, const std::string& out) {
  CorpusManifest corpus = load_manifest(manifest);
  fs::create_directories(fs::path(out) / "features");
  std::size_t computed = 0;
  for (auto& rec : corpus.records) {
    if (!rec.audio) continue;
    try {
      const Waveform wav = read_wav(*rec.audio);
      const FeatureSequence f = compute_mfcc(wav.samples, wav.sample_rate);
      const fs::path path = fs::path(out) / "features" / (rec.id + ".feat");
      write_features(f, path);
      rec.features = path;
      rec.audio.reset();
      rec.duration_s = wav.duration_s();
      ++computed;
    } catch (const Error& e) {
      throw Error(e.stage(), "record '" + rec.id + "': " + e.what());
    }
  }
  save_manifest(corpus, fs::path(out) / "manifest.jsonl");
  std::cout << "computed features for " << computed << " utterances\n";
  return 0;
}

int cmd_train(const Overrides& o) {
  ExperimentConfig cfg = apply(o);
  cfg.validate();
  fs::create_directories(cfg.out);
  const CorpusManifest corpus = prepare_corpus(cfg.corpus, cfg.out, false);
  cfg.model.vocab_size = static_cast<int>(corpus.vocabulary.size());
  Model model(cfg.model);
  if (cfg.warm_start)
    model = warm_start(std::move(model), load_checkpoint(cfg.warm_start->checkpoint), cfg.warm_start->mode,
                       corpus.vocabulary.hash());
  const auto result = train(std::move(model), corpus, cfg.train, [](const TrainLogEntry& e) {
    std::cout << "epoch " << e.epoch << " loss " << e.train_loss << " dev_f1 " << e.dev_f1 << '\n';
  });
  write_train_log(result.log, cfg.out / "train_log.jsonl");
  save_checkpoint(result.model,
                  {cfg.model, corpus.vocabulary.hash(), cfg.train.seed, result.best_epoch, result.best_dev_f1},
                  cfg.out / "checkpoint");
  std::cout << "best epoch " << result.best_epoch << " dev F1 " << result.best_dev_f1 << '\n';
  return 0;
}

int cmd_localise(const std::string& checkpoint, const std::string& manifest, const std::string& methods,
                 const std::string& split, const std::string& out, int threads) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const CorpusManifest corpus = load_manifest(manifest);
  if (corpus.vocabulary.hash() != ckpt.meta.vocabulary_hash)
    throw VocabularyError("corpus vocabulary differs from the checkpoint's vocabulary");
  const auto ms = parse_methods(methods);
  for (LocMethod m : ms) {
    if (!supports(ckpt.model.config().architecture, m))
      throw ConfigError("method " + to_string(m) + " does not apply to " + to_string(ckpt.model.config().architecture));
  }
  const auto records = localise_corpus(ckpt.model, corpus, parse_split(split), ms, {}, threads);
  for (LocMethod m : ms) {
    std::vector<ScoreRecord> subset;
    for (const auto& r : records) {
      if (r.method == to_string(m)) subset.push_back(r);
    }
    write_score_dump(subset, fs::path(out) / (to_string(m) + ".jsonl"));
  }
  std::cout << "wrote " << records.size() << " score tracks to " << out << '\n';
  return 0;
}

std::vector<ScoreRecord> read_dumps(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.path().extension() == ".jsonl") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(in);
    }
  }
  std::vector<ScoreRecord> all;
  for (const auto& f : files) {
    for (auto& r : read_score_dump(f)) all.push_back(std::move(r));
  }
  return all;
}

int cmd_evaluate(const std::string& manifest, const std::vector<std::string>& scores, const std::string& split,
                 double theta, const std::string& out) {
  ManifestLoadOptions opts;
  opts.require_test_alignments = true;
  const CorpusManifest corpus = load_manifest(manifest, opts);
  EvalConfig cfg;
  cfg.theta = theta;
  const auto report = build_report(eval_input_from_dumps(corpus, parse_split(split), read_dumps(scores)), cfg);
  write_report_artifacts(report, out);
  print_summary(report);
  return 0;
}

int cmd_kappa(const std::string& a, const std::string& b, const std::string& split, const std::string& out) {
  const CorpusManifest ca = load_manifest(a);
  const CorpusManifest cb = load_manifest(b);
  const auto result = cooccurrence_matrix(presence_table(ca, parse_split(split)), presence_table(cb, parse_split(split)));
  fs::create_directories(out);
  nlohmann::ordered_json j;
  j["row_keywords"] = result.row_keywords;
  j["col_keywords"] = result.col_keywords;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < result.kappa_norm.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index k = 0; k < result.kappa_norm.cols(); ++k) {
      const double v = result.kappa_norm(i, k);
      row.push_back(std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr));
    }
    rows.push_back(std::move(row));
  }
  j["kappa_norm"] = std::move(rows);
  j["diagonal_mean"] = result.diagonal_mean;
  j["off_diagonal_mean"] = result.off_diagonal_mean;
  j["diagonal_argmax_fraction"] = result.diagonal_argmax_fraction;
  std::ofstream(fs::path(out) / "kappa.json", std::ios::binary) << j.dump(2) << '\n';
  write_heatmap_svg(fs::path(out) / "kappa.svg", "Normalised kappa", result.row_keywords, result.col_keywords,
                    result.kappa_norm);
  std::cout << "diagonal mean " << result.diagonal_mean << ", off-diagonal mean " << result.off_diagonal_mean << '\n';
  return 0;
}

int cmd_report(const std::string& report_path, const std::string& out) {
  std::ifstream in(report_path);
  if (!in) throw IoError("report", "cannot read " + report_path);
  nlohmann::ordered_json report;
  try {
    report = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(report_path, 0, e.what());
  }
  write_report_artifacts(report, out);
  print_summary(report);
  return 0;
}

int cmd_run(const Overrides& o) {
  const ExperimentConfig cfg = apply(o);
  const auto result = run_experiment(cfg);
  std::cout << "best epoch " << result.training.best_epoch << " dev F1 " << result.training.best_dev_f1 << '\n';
  print_summary(result.report);
  std::cout << "artifacts in " << cfg.out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visually grounded keyword spotting and localisation"};
  app.require_subcommand(1);

  std::string toy_config, toy_out = "toy";
  std::optional<std::uint64_t> toy_seed;
  auto* toygen = app.add_subcommand("toygen", "Generate a synthetic toy corpus");
  toygen->add_option("-c,--config", toy_config, "Toy corpus config (JSON)")->check(CLI::ExistingFile);
  toygen->add_option("--seed", toy_seed, "Corpus seed");
  toygen->add_option("--out", toy_out, "Output directory");

  std::string feat_manifest, feat_out = "features";
  auto* featurize = app.add_subcommand("featurize", "Compute MFCC features for audio records");
  featurize->add_option("-m,--manifest", feat_manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  featurize->add_option("--out", feat_out, "Output directory");

  Overrides train_o;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_override_flags(train_cmd, train_o);

  std::string loc_ckpt, loc_manifest, loc_methods = "attention", loc_split = "test", loc_out = "scores";
  int loc_threads = 1;
  auto* localise = app.add_subcommand("localise", "Write localisation score dumps");
  localise->add_option("--checkpoint", loc_ckpt, "Checkpoint base path")->required();
  localise->add_option("-m,--manifest", loc_manifest, "Corpus manifest")->required()->check(CLI::ExistingFile);
  localise->add_option("--methods", loc_methods, "Comma-separated localisation methods");
  localise->add_option("--split", loc_split, "Split to localise");
  localise->add_option("--out", loc_out, "Output directory");
  localise->add_option("--threads", loc_threads, "Worker threads");

  std::string eval_manifest, eval_split = "test", eval_out = "report";
  std::vector<std::string> eval_scores;
  double eval_theta = 0.5;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate score dumps against a corpus");
  evaluate->add_option("-m,--manifest", eval_manifest, "Corpus manifest")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--scores", eval_scores, "Score dump files or directories")->required();
  evaluate->add_option("--split", eval_split, "Split to evaluate");
  evaluate->add_option("--theta", eval_theta, "Detection threshold");
  evaluate->add_option("--out", eval_out, "Output directory");

  std::string kappa_a, kappa_b, kappa_split = "train", kappa_out = "kappa";
  auto* kappa = app.add_subcommand("kappa", "Keyword co-occurrence between two corpora");
  kappa->add_option("--manifest-a", kappa_a, "First corpus")->required()->check(CLI::ExistingFile);
  kappa->add_option("--manifest-b", kappa_b, "Second corpus")->required()->check(CLI::ExistingFile);
  kappa->add_option("--split", kappa_split, "Split to compare");
  kappa->add_option("--out", kappa_out, "Output directory");

  std::string report_in, report_out = "report";
  auto* report = app.add_subcommand("report", "Re-render CSV and plots from a report");
  report->add_option("--report", report_in, "report.json")->required()->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "Output directory");

  Overrides run_o;
  auto* run = app.add_subcommand("run", "Full pipeline: data, training, localisation, evaluation");
  add_override_flags(run, run_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*toygen) return cmd_toygen(toy_config, toy_seed, toy_out);
    if (*featurize) return cmd_featurize(feat_manifest, feat_out);
    if (*train_cmd) return cmd_train(train_o);
    if (*localise) return cmd_localise(loc_ckpt, loc_manifest, loc_methods, loc_split, loc_out, loc_threads);
    if (*evaluate) return cmd_evaluate(eval_manifest, eval_scores, eval_split, eval_theta, eval_out);
    if (*kappa) return cmd_kappa(kappa_a, kappa_b, kappa_split, kappa_out);
    if (*report) return cmd_report(report_in, report_out);
    if (*run) return cmd_run(run_o);
  } catch (const Error& e) {
    std::cerr << "vgskws [" << e.stage() << "] error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "vgskws [internal] error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
