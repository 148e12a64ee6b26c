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

#include "vgskws/experiment.hpp"

#include <fstream>
#include <map>
#include <thread>

#include "vgskws/error.hpp"
#include "vgskws/hash.hpp"
#include "vgskws/plots.hpp"

namespace vgskws {

namespace fs = std::filesystem;
using json = nlohmann::json;

void ExperimentConfig::validate() const {
  if (corpus.toy.has_value() == corpus.manifest.has_value())
    throw ConfigError("corpus: exactly one of 'toy' or 'manifest' must be given");
  if (corpus.toy) corpus.toy->validate();
  if (corpus.manifest && !fs::exists(*corpus.manifest))
    throw ConfigError("corpus: manifest " + corpus.manifest->string() + " does not exist");
  if (corpus.vocabulary && !fs::exists(*corpus.vocabulary))
    throw ConfigError("corpus: vocabulary " + corpus.vocabulary->string() + " does not exist");
  train.validate();
  eval.validate();
  if (methods.empty()) throw ConfigError("methods: at least one localisation method is required");
  for (LocMethod m : methods) {
    if (!supports(model.architecture, m))
      throw ConfigError("methods: " + to_string(m) + " does not apply to " + to_string(model.architecture));
  }
  if (warm_start && !fs::exists(warm_start->checkpoint.string() + ".json"))
    throw ConfigError("warm_start: checkpoint " + warm_start->checkpoint.string() + " does not exist");
  if (plot_utterances < 0) throw ConfigError("plot_utterances must be >= 0");
}

void to_json(json& j, const ExperimentConfig& c) {
  json corpus = json::object();
  if (c.corpus.toy) corpus["toy"] = *c.corpus.toy;
  if (c.corpus.manifest) corpus["manifest"] = c.corpus.manifest->generic_string();
  if (c.corpus.vocabulary) corpus["vocabulary"] = c.corpus.vocabulary->generic_string();
  if (c.corpus.query_language) corpus["query_language"] = *c.corpus.query_language;
  corpus["textgrid_tier"] = c.corpus.textgrid_tier;
  std::vector<std::string> methods;
  for (LocMethod m : c.methods) methods.push_back(to_string(m));
  j = json{{"corpus", corpus},
           {"model", c.model},
           {"train", c.train},
           {"methods", methods},
           {"eval", {{"theta", c.eval.theta}, {"per_keyword", c.eval.per_keyword}}},
           {"masked",
            {{"min_width_s", c.masked.min_width_s},
             {"max_width_s", c.masked.max_width_s},
             {"width_step_s", c.masked.width_step_s},
             {"overlap_s", c.masked.overlap_s}}},
           {"out", c.out.generic_string()},
           {"plot_utterances", c.plot_utterances}};
  if (c.warm_start)
    j["warm_start"] = {{"checkpoint", c.warm_start->checkpoint.generic_string()},
                       {"mode", c.warm_start->mode == WarmStartMode::kAll ? "all" : "encoder_only"}};
}

void from_json(const json& j, ExperimentConfig& c) {
  if (j.contains("corpus")) {
    const auto& s = j.at("corpus");
    if (s.contains("toy")) c.corpus.toy = s.at("toy").get<ToyConfig>();
    if (s.contains("manifest")) c.corpus.manifest = fs::path(s.at("manifest").get<std::string>());
    if (s.contains("vocabulary")) c.corpus.vocabulary = fs::path(s.at("vocabulary").get<std::string>());
    if (s.contains("query_language")) c.corpus.query_language = s.at("query_language").get<std::string>();
    if (s.contains("textgrid_tier")) s.at("textgrid_tier").get_to(c.corpus.textgrid_tier);
  }
  if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
  if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(parse_loc_method(m.get<std::string>()));
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    if (e.contains("theta")) e.at("theta").get_to(c.eval.theta);
    if (e.contains("per_keyword")) e.at("per_keyword").get_to(c.eval.per_keyword);
  }
  if (j.contains("masked")) {
    const auto& m = j.at("masked");
    if (m.contains("min_width_s")) m.at("min_width_s").get_to(c.masked.min_width_s);
    if (m.contains("max_width_s")) m.at("max_width_s").get_to(c.masked.max_width_s);
    if (m.contains("width_step_s")) m.at("width_step_s").get_to(c.masked.width_step_s);
    if (m.contains("overlap_s")) m.at("overlap_s").get_to(c.masked.overlap_s);
  }
  if (j.contains("out")) c.out = fs::path(j.at("out").get<std::string>());
  if (j.contains("plot_utterances")) j.at("plot_utterances").get_to(c.plot_utterances);
  if (j.contains("warm_start") && !j.at("warm_start").is_null()) {
    WarmStartSpec w;
    w.checkpoint = fs::path(j.at("warm_start").at("checkpoint").get<std::string>());
    if (j.at("warm_start").contains("mode")) w.mode = parse_warm_start_mode(j.at("warm_start").at("mode").get<std::string>());
    c.warm_start = w;
  }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config", "cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg = j.get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  // Input paths are relative to the config file.
  const fs::path base = path.parent_path();
  const auto rebase = [&](fs::path& p) {
    if (p.is_relative()) p = (base / p).lexically_normal();
  };
  if (cfg.corpus.manifest) rebase(*cfg.corpus.manifest);
  if (cfg.corpus.vocabulary) rebase(*cfg.corpus.vocabulary);
  if (cfg.warm_start) rebase(cfg.warm_start->checkpoint);
  return cfg;
}

CorpusManifest prepare_corpus(const CorpusSource& source, const fs::path& work_dir, bool require_test_alignments) {
  ManifestLoadOptions opts;
  opts.vocabulary_path = source.vocabulary;
  opts.query_language = source.query_language;
  opts.textgrid_tier = source.textgrid_tier;
  opts.require_test_alignments = require_test_alignments;
  if (source.toy) {
    const fs::path dir = work_dir / "corpus";
    generate_toy_corpus(*source.toy, dir);
    return load_manifest(dir / "manifest.jsonl", opts);
  }
  if (!source.manifest) throw ConfigError("corpus: no source given");
  return load_manifest(*source.manifest, opts);
}

std::vector<ScoreRecord> localise_corpus(const Model& model, const CorpusManifest& corpus, Split split,
                                         const std::vector<LocMethod>& methods, const MaskedConfig& mcfg,
                                         int threads) {
  const auto records = corpus.split(split);
  const auto& keywords = corpus.vocabulary.keywords();
  // per_utt[n][m]: records of utterance n for method m.
  std::vector<std::vector<std::vector<ScoreRecord>>> per_utt(records.size());
  const auto work = [&](std::size_t n) {
    const UtteranceRecord& rec = *records[n];
    try {
      const FeatureSequence f = load_record_features(rec);
      const ForwardTrace trace = model.forward(f);
      per_utt[n].resize(methods.size());
      for (std::size_t m = 0; m < methods.size(); ++m) {
        const auto tracks = localise_all(model, f, trace, methods[m], mcfg);
        for (const auto& t : tracks) {
          ScoreRecord r;
          r.utt_id = rec.id;
          r.keyword = keywords.at(t.keyword);
          r.method = to_string(methods[m]);
          r.detection_score = trace.y_hat[static_cast<Eigen::Index>(t.keyword)];
          r.scores = t.scores;
          r.times_s = t.times_s;
          per_utt[n][m].push_back(std::move(r));
        }
      }
    } catch (const Error& e) {
      throw Error(e.stage(), "record '" + rec.id + "': " + e.what());
    }
  };
  int workers = threads > 0 ? threads : static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  workers = std::max(1, std::min<int>(workers, static_cast<int>(records.size())));
  if (workers == 1) {
    for (std::size_t n = 0; n < records.size(); ++n) work(n);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int k = 0; k < workers; ++k) {
      pool.emplace_back([&, k] {
        try {
          for (std::size_t n = static_cast<std::size_t>(k); n < records.size(); n += static_cast<std::size_t>(workers)) work(n);
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
  std::vector<ScoreRecord> out;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (auto& u : per_utt) {
      for (auto& r : u[m]) out.push_back(std::move(r));
    }
  }
  return out;
}

EvalInput eval_input_from_dumps(const CorpusManifest& corpus, Split split, const std::vector<ScoreRecord>& records) {
  const auto recs = corpus.split(split);
  EvalInput in;
  in.keywords = corpus.vocabulary.keywords();
  const auto N = static_cast<Eigen::Index>(recs.size());
  const auto V = static_cast<Eigen::Index>(in.keywords.size());
  std::map<std::string, Eigen::Index> row;
  bool all_aligned = !recs.empty();
  for (Eigen::Index n = 0; n < N; ++n) {
    const auto& r = *recs[static_cast<std::size_t>(n)];
    in.utt_ids.push_back(r.id);
    in.durations_s.push_back(r.duration_s.value_or(0.0));
    row[r.id] = n;
    all_aligned = all_aligned && r.alignment.has_value();
  }
  in.presence.resize(N, V);
  for (Eigen::Index n = 0; n < N; ++n) {
    const auto p = corpus.presence(*recs[static_cast<std::size_t>(n)]);
    for (Eigen::Index w = 0; w < V; ++w) in.presence(n, w) = p[static_cast<std::size_t>(w)];
  }
  if (all_aligned) {
    in.intervals.assign(static_cast<std::size_t>(N), std::vector<Intervals>(static_cast<std::size_t>(V)));
    for (Eigen::Index n = 0; n < N; ++n) {
      const auto& al = *recs[static_cast<std::size_t>(n)]->alignment;
      for (Eigen::Index w = 0; w < V; ++w) {
        for (const auto& e : al.occurrences(in.keywords[static_cast<std::size_t>(w)]))
          in.intervals[static_cast<std::size_t>(n)][static_cast<std::size_t>(w)].emplace_back(e.start_s, e.end_s);
      }
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  in.scores = Eigen::MatrixXd::Constant(N, V, nan);
  for (const auto& r : records) {
    const auto it = row.find(r.utt_id);
    if (it == row.end()) throw Error("eval", "score dump mentions unknown utterance '" + r.utt_id + "'");
    const auto w = corpus.vocabulary.find(r.keyword);
    if (!w) throw VocabularyError("score dump keyword '" + r.keyword + "' is not in the vocabulary");
    const auto wi = static_cast<Eigen::Index>(*w);
    in.scores(it->second, wi) = r.detection_score;
    auto [tau_it, inserted] = in.tau.try_emplace(r.method, Eigen::MatrixXd::Constant(N, V, nan));
    LocalisationScores track;
    track.scores = r.scores;
    track.times_s = r.times_s;
    tau_it->second(it->second, wi) = track.scores.empty() ? nan : argmax_location(track);
  }
  for (Eigen::Index n = 0; n < N; ++n) {
    for (Eigen::Index w = 0; w < V; ++w) {
      if (!std::isfinite(in.scores(n, w)))
        throw RangeError("eval", "no detection score for utterance '" + in.utt_ids[static_cast<std::size_t>(n)] +
                                     "', keyword '" + in.keywords[static_cast<std::size_t>(w)] + "'");
    }
  }
  return in;
}

void write_report_artifacts(const nlohmann::ordered_json& report, const fs::path& dir) {
  fs::create_directories(dir / "plots");
  {
    std::ofstream out(dir / "report.json", std::ios::binary);
    if (!out) throw IoError("report", "cannot write " + (dir / "report.json").string());
    out << report.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "report.csv", std::ios::binary);
    if (!out) throw IoError("report", "cannot write " + (dir / "report.csv").string());
    out << report_csv(report);
  }
  const auto& det = report.at("detection");
  if (det.contains("per_keyword")) {
    std::vector<std::string> labels;
    std::vector<std::optional<double>> values;
    for (const auto& [kw, e] : det.at("per_keyword").items()) {
      labels.push_back(kw);
      values.push_back(e.at("f1").is_null() ? std::nullopt : std::optional<double>(e.at("f1").get<double>()));
    }
    write_bar_chart_svg(dir / "plots" / "detection_f1.svg", "Keyword detection F1", labels, values, "F1");
  }
  for (const auto& [method, mj] : report.at("localisation").items()) {
    const auto& oracle = mj.at("oracle");
    if (!oracle.contains("per_keyword")) continue;
    std::vector<std::string> labels;
    std::vector<std::optional<double>> values;
    for (const auto& [kw, v] : oracle.at("per_keyword").items()) {
      labels.push_back(kw);
      values.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
    }
    write_bar_chart_svg(dir / "plots" / ("oracle_" + method + ".svg"), "Oracle localisation accuracy (" + method + ")",
                        labels, values, "accuracy");
  }
}

void write_track_plots(const CorpusManifest& corpus, const std::vector<ScoreRecord>& records, const fs::path& dir,
                       int max_utterances) {
  fs::create_directories(dir);
  const auto tests = corpus.split(Split::kTest);
  const std::size_t limit = std::min(tests.size(), static_cast<std::size_t>(std::max(0, max_utterances)));
  for (std::size_t n = 0; n < limit; ++n) {
    const auto& rec = *tests[n];
    const auto present = corpus.presence(rec);
    for (const auto& r : records) {
      if (r.utt_id != rec.id) continue;
      const auto w = corpus.vocabulary.find(r.keyword);
      if (!w || !present[*w] || r.scores.empty()) continue;
      std::vector<std::pair<double, double>> iv;
      if (rec.alignment) {
        for (const auto& e : rec.alignment->occurrences(r.keyword)) iv.emplace_back(e.start_s, e.end_s);
      }
      LocalisationScores track;
      track.scores = r.scores;
      track.times_s = r.times_s;
      const double dur = rec.duration_s.value_or(r.times_s.empty() ? 1.0 : r.times_s.back());
      write_track_svg(dir / ("track_" + rec.id + "_" + r.method + "_" + r.keyword + ".svg"),
                      rec.id + " / " + r.keyword + " / " + r.method, r.times_s, r.scores, iv,
                      argmax_location(track), dur);
    }
  }
}

PresenceTable presence_table(const CorpusManifest& corpus, Split split) {
  PresenceTable t;
  const auto recs = corpus.split(split);
  t.keywords = corpus.vocabulary.keywords();
  t.present.resize(static_cast<Eigen::Index>(recs.size()), static_cast<Eigen::Index>(t.keywords.size()));
  for (std::size_t n = 0; n < recs.size(); ++n) {
    t.ids.push_back(recs[n]->id);
    const auto p = corpus.presence(*recs[n]);
    for (std::size_t w = 0; w < p.size(); ++w)
      t.present(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(w)) = p[w];
  }
  return t;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg_in) {
  cfg_in.validate();
  ExperimentConfig cfg = cfg_in;
  const fs::path out = cfg.out;
  fs::create_directories(out);

  const CorpusManifest corpus = prepare_corpus(cfg.corpus, out, true);
  const fs::path manifest_path = cfg.corpus.toy ? out / "corpus" / "manifest.jsonl" : *cfg.corpus.manifest;
  {
    std::ofstream h(out / "manifest_hash.txt", std::ios::binary);
    h << file_hash(manifest_path) << '\n';
  }

  const auto train_recs = corpus.split(Split::kTrain);
  if (train_recs.empty()) throw Error("train", "empty train split");
  cfg.model.vocab_size = static_cast<int>(corpus.vocabulary.size());
  if (train_recs.front()->features)
    cfg.model.feature_dim = static_cast<int>(read_feature_header(*train_recs.front()->features).dims);
  cfg.model.validate();
  {
    std::ofstream snap(out / "config.json", std::ios::binary);
    snap << json(cfg).dump(2) << '\n';
  }

  Model model(cfg.model);
  const std::string vocab_hash = corpus.vocabulary.hash();
  if (cfg.warm_start) {
    const Checkpoint ckpt = load_checkpoint(cfg.warm_start->checkpoint);
    model = warm_start(std::move(model), ckpt, cfg.warm_start->mode, vocab_hash);
  }

  ExperimentResult result{{}, train(std::move(model), corpus, cfg.train)};
  write_train_log(result.training.log, out / "train_log.jsonl");
  CheckpointMeta meta{cfg.model, vocab_hash, cfg.train.seed, result.training.best_epoch, result.training.best_dev_f1};
  save_checkpoint(result.training.model, meta, out / "checkpoint");

  const auto records =
      localise_corpus(result.training.model, corpus, Split::kTest, cfg.methods, cfg.masked, cfg.train.threads);
  std::vector<ScoreRecord> reloaded;
  for (LocMethod m : cfg.methods) {
    std::vector<ScoreRecord> subset;
    for (const auto& r : records) {
      if (r.method == to_string(m)) subset.push_back(r);
    }
    const fs::path dump = out / "scores" / (to_string(m) + ".jsonl");
    write_score_dump(subset, dump);
    for (auto& r : read_score_dump(dump)) reloaded.push_back(std::move(r));
  }

  result.report = build_report(eval_input_from_dumps(corpus, Split::kTest, reloaded), cfg.eval);
  write_report_artifacts(result.report, out);
  write_track_plots(corpus, reloaded, out / "plots", cfg.plot_utterances);
  return result;
}

}  // namespace vgskws
