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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eval_fixture.hpp"
#include "oracles.hpp"
#include "vgskws/error.hpp"
#include "vgskws/eval.hpp"
#include "vgskws/experiment.hpp"
#include "vgskws/kappa.hpp"
#include "vgskws/localise.hpp"
#include "vgskws/model.hpp"
#include "vgskws/rng.hpp"
#include "vgskws/train.hpp"

namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace vgskws::acceptance {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double time_limit_s;  // 0 when the criterion has no runtime bound
  std::function<Outcome()> run;
  std::function<void()> prepare = {};
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::optional<double> opt(const nlohmann::ordered_json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Rng seeded(std::uint64_t seed, std::string_view label) { return SeedSequence(seed).with(label).rng(); }

MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(rng);
  return m;
}

FeatureSequence normal_features(Eigen::Index frames, Eigen::Index dims, Rng& rng) {
  FeatureSequence f;
  f.values = normal_matrix(frames, dims, rng);
  return f;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

class Suite {
 public:
  Suite(fs::path configs, fs::path work) : configs_(std::move(configs)), work_(std::move(work)) {}

  Outcome ac1() {
    MatrixXd scores(4, 1), tau(4, 1);
    BoolMatrix presence(4, 1);
    scores << 0.9, 0.8, 0.7, 0.2;
    tau << 0.45, 0.30, 1.40, 0.65;
    presence << true, false, true, true;
    const IntervalTable intervals = {{{{0.30, 0.60}}}, {{}}, {{{0.20, 0.50}}}, {{{0.50, 0.80}}}};
    const auto oracle = eval_oracle_localisation(tau, presence, intervals);
    const auto actual = eval_actual_localisation(scores, tau, presence, intervals, 0.5);
    const Prf& p = actual.per_keyword[0];
    const bool ok = oracle.accuracy && *oracle.accuracy == 2.0 / 3.0 && p.precision && *p.precision == 1.0 / 3.0 &&
                    p.recall && *p.recall == 0.5 && p.f1 && std::abs(*p.f1 - 0.4) <= 1e-15;
    return {ok, "oracle=" + fmt(oracle.accuracy.value_or(NAN), 17) + " P=" + fmt(p.precision.value_or(NAN), 17) +
                    " R=" + fmt(p.recall.value_or(NAN), 17) + " F1=" + fmt(p.f1.value_or(NAN), 17)};
  }

  Outcome ac2() {
    Rng rng = seeded(2, "pooling");
    double worst_max = 0.0, worst_mean = 0.0, bound_max = 0.0, bound_mean = 0.0;
    std::size_t sandwich_violations = 0, rows = 0;
    for (int rep = 0; rep < 100; ++rep) {
      const int T = uniform_int(rng, 2, 100);
      const MatrixXd H = normal_matrix(12, T, rng);
      const VectorXd hi = pool_log_mean_exp(H, 500.0);
      const VectorXd lo = pool_log_mean_exp(H, 1e-3);
      for (Eigen::Index w = 0; w < H.rows(); ++w, ++rows) {
        const double mx = H.row(w).maxCoeff(), mean = H.row(w).mean();
        worst_max = std::max(worst_max, std::abs(hi[w] - mx));
        worst_mean = std::max(worst_mean, std::abs(lo[w] - mean));
        bound_max = std::max(bound_max, std::log(static_cast<double>(T)) / 500.0);
        const double range = mx - H.row(w).minCoeff();
        bound_mean = std::max(bound_mean, 1e-3 * range * range / 8.0);
        for (double r : {0.1, 1.0, 10.0}) {
          const double v = pool_log_mean_exp(H, r)[w];
          if (v < mean - 1e-12 || v > mx + 1e-12) ++sandwich_violations;
        }
      }
    }
    const bool ok = worst_max <= 1e-3 && worst_mean <= 1e-3 && sandwich_violations == 0;
    return {ok, "max|lme(r=500)-max|=" + fmt(worst_max) + " (log(T)/500 up to " + fmt(bound_max) +
                    ") max|lme(r=1e-3)-mean|=" + fmt(worst_mean) + " (r*range^2/8 up to " + fmt(bound_mean) + ") sandwich violations=" +
                    std::to_string(sandwich_violations) + "/" + std::to_string(3 * rows)};
  }

  static double gradcam_worst(const Model& m, const std::vector<FeatureSequence>& inputs, Rng& rng, int coords) {
    double worst = 0.0;
    const auto V = m.config().vocab_size;
    for (int k = 0; k < coords; ++k) {
      const auto& f = inputs[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(inputs.size()) - 1))];
      const MatrixXd H = m.forward(f).H;
      const auto w = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(V) - 1));
      const auto e = static_cast<Eigen::Index>(uniform_int(rng, 0, static_cast<int>(H.rows()) - 1));
      const VectorXd gamma = gradcam_weights(m, H, w);
      const double h = 1e-4;
      MatrixXd up = H, down = H;
      up.row(e).array() += h;
      down.row(e).array() -= h;
      const auto wi = static_cast<Eigen::Index>(w);
      const double fd = (sigmoid(m.head(up).logits[wi]) - sigmoid(m.head(down).logits[wi])) / (2.0 * h) /
                        static_cast<double>(H.cols());
      const double scale = std::max({std::abs(fd), std::abs(gamma[e]), 1e-10});
      worst = std::max(worst, std::abs(gamma[e] - fd) / scale);
    }
    return worst;
  }

  Outcome ac3() {
    const ExperimentConfig cfg = base_config("toy_bow_attend.json");
    ModelConfig mc = cfg.model;
    mc.vocab_size = cfg.corpus.toy->vocab_size;
    mc.feature_dim = cfg.corpus.toy->feature_dim;
    const Model untrained(mc);
    Rng rng = seeded(3, "gradcam");
    std::vector<FeatureSequence> noise;
    for (int i = 0; i < 8; ++i) noise.push_back(normal_features(uniform_int(rng, 40, 200), mc.feature_dim, rng));
    const double e_untrained = gradcam_worst(untrained, noise, rng, 50);

    const fs::path dir = ac6_dir();
    const Checkpoint ck = load_checkpoint(dir / "checkpoint");
    const CorpusManifest corpus = load_manifest(dir / "corpus" / "manifest.jsonl");
    std::vector<FeatureSequence> utts;
    for (const auto& r : corpus.records) {
      if (r.split == Split::kTest && utts.size() < 8) utts.push_back(load_record_features(r));
    }
    const double e_trained = gradcam_worst(ck.model, utts, rng, 50);
    return {e_untrained < 1e-2 && e_trained < 1e-2,
            "max rel err untrained=" + fmt(e_untrained) + " trained=" + fmt(e_trained) + " over 50 coords each"};
  }

  Outcome ac4() {
    Rng rng = seeded(4, "attention");
    double worst_sum = 0.0, worst_shift = 0.0, worst_model = 0.0;
    for (int trace = 0; trace < 1000; ++trace) {
      ModelConfig mc;
      mc.architecture = Architecture::kCnnAttend;
      mc.vocab_size = 12;
      mc.feature_dim = 39;
      mc.encoder_channels = {16, 16, 16, 16, 16, 24};
      mc.clf_hidden = 32;
      mc.seed = static_cast<std::uint64_t>(trace / 100);
      if (trace % 100 == 0) model_ = std::make_unique<Model>(mc);
      const ForwardTrace t = model_->forward(normal_features(uniform_int(rng, 10, 150), 39, rng));
      const MatrixXd& Q = model_->params()[model_->params().find("att.query")];
      const double c = 10.0 * (uniform01(rng) - 0.5);
      const MatrixXd shifted = (t.H.array() + c).matrix();
      const MatrixXd& A = *t.attention;
      for (Eigen::Index w = 0; w < A.rows(); ++w) {
        worst_sum = std::max(worst_sum, std::abs(A.row(w).sum() - 1.0));
        const VectorXd a = attention_weights(t.H, Q.row(w).transpose());
        const VectorXd b = attention_weights(shifted, Q.row(w).transpose());
        worst_model = std::max(worst_model, (a - A.row(w).transpose()).cwiseAbs().maxCoeff());
        worst_shift = std::max(worst_shift, (a - b).cwiseAbs().maxCoeff());
      }
    }
    model_.reset();
    return {worst_sum <= 1e-6 && worst_shift <= 1e-12 && worst_model <= 1e-12,
            "max|sum-1|=" + fmt(worst_sum) + " max shift diff=" + fmt(worst_shift) +
                " max diff vs model trace=" + fmt(worst_model)};
  }

  Outcome ac5() {
    Rng rng = seeded(5, "metrics");
    std::size_t mismatches = 0;
    std::string first;
    int keywords = 0;
    for (int rep = 0; rep < 20; ++rep) {
      const auto c = oracle::random_corpus(rng);
      keywords += static_cast<int>(c.input.keywords.size());
      const auto bad = oracle::compare_with_oracle(c);
      mismatches += bad.size();
      if (!bad.empty() && first.empty()) first = bad.front();
    }
    return {mismatches == 0, "20 corpora, " + std::to_string(keywords) + " keywords, mismatches=" +
                                 std::to_string(mismatches) + (first.empty() ? "" : " first: " + first)};
  }

  Outcome ac6() {
    const fs::path dir = ac6_dir();
    const double wall = ac6_wall_s_;
    const auto& report = reports_.at(dir);
    const CorpusManifest corpus = load_manifest(dir / "corpus" / "manifest.jsonl");
    const double dev_base = random_detection_baseline(presence_table(corpus, Split::kDev).present);
    const double loc_base = report["baselines"]["random_localisation"].get<double>();
    const double dev_f1 = ac6_dev_f1_;
    const double oracle_acc = opt(report["localisation"]["attention"]["oracle"]["accuracy"]).value_or(0.0);
    const bool ok = dev_f1 >= 0.8 && dev_f1 >= 3.0 * dev_base && oracle_acc >= 0.8 && oracle_acc >= 3.0 * loc_base &&
                    wall <= 900.0;
    return {ok, "dev F1=" + fmt(dev_f1) + " (random " + fmt(dev_base) + ") test oracle attention=" + fmt(oracle_acc) +
                    " (random " + fmt(loc_base) + ") run " + fmt(wall, 3) + " s"};
  }

  Outcome ac7() {
    bool ok = true;
    std::ostringstream d;
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto bow = run("ac7/bow_seed" + std::to_string(seed), seeded_config("toy_bow_attend.json", seed, true));
      const auto vis = run("ac7/visual_seed" + std::to_string(seed), seeded_config("toy_visual_attend.json", seed, true));
      const bool same_corpus = read_bytes(work_ / ("ac7/bow_seed" + std::to_string(seed)) / "manifest_hash.txt") ==
                               read_bytes(work_ / ("ac7/visual_seed" + std::to_string(seed)) / "manifest_hash.txt");
      const double fb = opt(bow.report["detection"]["macro"]["f1_strict"]).value_or(0.0);
      const double fv = opt(vis.report["detection"]["macro"]["f1_strict"]).value_or(0.0);
      const double fr = bow.report["baselines"]["random_detection_f1"].get<double>();
      const double ob = opt(bow.report["localisation"]["attention"]["oracle"]["accuracy"]).value_or(0.0);
      const double ov = opt(vis.report["localisation"]["attention"]["oracle"]["accuracy"]).value_or(0.0);
      const double orr = bow.report["baselines"]["random_localisation"].get<double>();
      ok = ok && same_corpus && fb >= fv && fv >= fr && ob >= ov && ov >= orr;
      d << "seed " << seed << ": F1 " << fmt(fb, 3) << "/" << fmt(fv, 3) << "/" << fmt(fr, 3) << " oracle "
        << fmt(ob, 3) << "/" << fmt(ov, 3) << "/" << fmt(orr, 3) << (same_corpus ? "" : " CORPUS DIFFERS") << "; ";
    }
    return {ok, d.str() + "(bow/visual/random)"};
  }

  Outcome ac8() {
    bool ok = true;
    std::ostringstream d;
    for (std::uint64_t seed : {1, 2, 3}) {
      const std::string s = std::to_string(seed);
      run("ac8/source_seed" + s, seeded_config("crosslingual_source_en.json", seed, false));
      ExperimentConfig warm = seeded_config("crosslingual_target_yo.json", seed, false);
      warm.warm_start = WarmStartSpec{work_ / ("ac8/source_seed" + s) / "checkpoint", WarmStartMode::kAll};
      ExperimentConfig scratch = warm;
      scratch.warm_start.reset();
      const auto rw = run("ac8/warm_seed" + s, warm);
      const auto rs = run("ac8/scratch_seed" + s, scratch);
      const double fw = epoch_dev_f1(rw.training, 10), fs_ = epoch_dev_f1(rs.training, 10);
      ok = ok && fw >= fs_;
      d << "seed " << seed << ": warm " << fmt(fw, 3) << " scratch " << fmt(fs_, 3) << "; ";
    }
    return {ok, d.str() + "(dev F1 at epoch 10)"};
  }

  Outcome ac9() {
    if (reports_.empty()) ac6_dir();
    std::size_t checks = 0, violations = 0;
    std::string first;
    auto le = [&](const nlohmann::ordered_json& a, const nlohmann::ordered_json& b, const std::string& what) {
      ++checks;
      const auto x = opt(a), y = opt(b);
      const bool good = x.has_value() == y.has_value() && (!x || *x <= *y);
      if (!good) {
        ++violations;
        if (first.empty()) first = what + " " + a.dump() + " > " + b.dump();
      }
    };
    for (const auto& [dir, report] : reports_) {
      if (report["theta"].get<double>() != 0.5) continue;
      const auto& det = report["detection"];
      const auto& spot = report["spotting"];
      for (const auto& [method, loc] : report["localisation"].items()) {
        const std::string where = dir.filename().string() + "/" + method;
        for (const char* key : {"f1", "f1_strict"}) le(loc["actual"]["macro"][key], det["macro"][key], where + " macro " + key);
        le(loc["actual"]["micro"]["f1"], det["micro"]["f1"], where + " micro f1");
        le(loc["spotting"]["macro"]["p_at_10"], spot["macro"]["p_at_10"], where + " macro P@10");
        for (const auto& [kw, v] : det["per_keyword"].items()) {
          le(loc["actual"]["per_keyword"][kw]["f1"], v["f1"], where + " " + kw + " f1");
          le(loc["spotting"]["per_keyword"][kw]["p_at_10"], spot["per_keyword"][kw]["p_at_10"], where + " " + kw + " P@10");
        }
      }
    }
    return {violations == 0 && checks > 0, std::to_string(reports_.size()) + " reports, " + std::to_string(checks) +
                                                " comparisons, violations=" + std::to_string(violations) +
                                                (first.empty() ? "" : " first: " + first)};
  }

  Outcome ac10() {
    Rng rng = seeded(10, "kappa");
    auto bernoulli = [&](std::size_t n, double p) {
      std::vector<bool> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = uniform01(rng) < p;
      return v;
    };
    double worst_perfect = 0.0, mean_abs = 0.0, worst_ref = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
      const auto a = bernoulli(500, 0.1 + 0.8 * uniform01(rng));
      worst_perfect = std::max(worst_perfect, std::abs(normalised_kappa(a, a).kappa_norm - 1.0));
      const auto b = bernoulli(500, 0.3 + 0.4 * uniform01(rng));
      const auto c = bernoulli(500, 0.3 + 0.4 * uniform01(rng));
      mean_abs += std::abs(normalised_kappa(b, c).kappa) / 200.0;
      const auto x = bernoulli(static_cast<std::size_t>(uniform_int(rng, 20, 500)), 0.5 * uniform01(rng) + 0.1);
      auto y = x;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (uniform01(rng) < 0.3) y[i] = uniform01(rng) < 0.4;
      }
      const auto lib = normalised_kappa(x, y);
      const auto ref = oracle::kappa_reference(x, y);
      if (!lib.degenerate) {
        worst_ref = std::max({worst_ref, std::abs(lib.kappa - ref.kappa), std::abs(lib.kappa_norm - ref.kappa_norm)});
      }
    }
    return {worst_perfect <= 1e-12 && mean_abs < 0.05 && worst_ref <= 1e-12,
            "max|kappa_norm(a,a)-1|=" + fmt(worst_perfect) + " mean|kappa| independent=" + fmt(mean_abs) +
                " max diff vs reference=" + fmt(worst_ref)};
  }

  void prepare_trained() { ac6_dir(); }

  Outcome ac11() {
    const fs::path first = ac6_dir();
    ExperimentConfig cfg = base_config("toy_bow_attend.json");
    run("ac11/repeat", cfg);
    const fs::path second = work_ / "ac11/repeat";
    bool ok = true;
    std::string detail;
    for (const char* name : {"report.json", "report.csv", "checkpoint.bin", "scores/attention.jsonl"}) {
      const bool same = read_bytes(first / name) == read_bytes(second / name) && !read_bytes(first / name).empty();
      ok = ok && same;
      detail += std::string(name) + (same ? " identical; " : " DIFFERS; ");
    }
    return {ok, detail + "report.json " + std::to_string(read_bytes(second / "report.json").size()) + " bytes"};
  }

 private:
  ExperimentConfig base_config(const std::string& name) const { return load_experiment_config(configs_ / name); }

  ExperimentConfig seeded_config(const std::string& name, std::uint64_t seed, bool attention_only) const {
    ExperimentConfig cfg = base_config(name);
    cfg.model.seed = seed;
    cfg.train.seed = seed;
    if (attention_only) cfg.methods = {LocMethod::kAttention};
    return cfg;
  }

  ExperimentResult run(const std::string& name, ExperimentConfig cfg) {
    cfg.out = work_ / name;
    std::error_code ec;
    fs::remove_all(cfg.out, ec);
    std::cerr << "  running " << name << "\n";
    ExperimentResult r = run_experiment(cfg);
    reports_[cfg.out] = r.report;
    return r;
  }

  fs::path ac6_dir() {
    const fs::path dir = work_ / "ac6";
    if (!reports_.count(dir)) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto r = run("ac6", base_config("toy_bow_attend.json"));
      ac6_wall_s_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      ac6_dev_f1_ = r.training.best_dev_f1;
    }
    return dir;
  }

  static double epoch_dev_f1(const TrainResult& t, int epoch) {
    for (const auto& e : t.log) {
      if (e.epoch == epoch) return e.dev_f1;
    }
    throw Error("acceptance", "no log entry for epoch " + std::to_string(epoch));
  }

  fs::path configs_;
  fs::path work_;
  std::map<fs::path, nlohmann::ordered_json> reports_;
  double ac6_wall_s_ = 0.0;
  double ac6_dev_f1_ = 0.0;
  std::unique_ptr<Model> model_;
};

}  // namespace
}  // namespace vgskws::acceptance

int main(int argc, char** argv) {
  using namespace vgskws::acceptance;
  CLI::App app{"Acceptance criteria AC1 to AC11"};
  fs::path configs = VGSKWS_CONFIG_DIR;
  fs::path work = fs::temp_directory_path() / "vgskws_acceptance";
  std::vector<int> only;
  app.add_option("--configs", configs, "Directory holding the experiment configs")->check(CLI::ExistingDirectory);
  app.add_option("--work", work, "Scratch directory for experiment outputs");
  app.add_option("--only", only, "Run only these criteria (by number)");
  CLI11_PARSE(app, argc, argv);

  Suite suite(configs, work);
  const std::vector<Criterion> all = {
      {1, "worked localisation example", 1.0, [&] { return suite.ac1(); }},
      {2, "log-mean-exp pooling limits", 5.0, [&] { return suite.ac2(); }},
      {3, "Grad-CAM weights match finite differences", 30.0, [&] { return suite.ac3(); },
       [&] { suite.prepare_trained(); }},
      {4, "attention normalisation and shift invariance", 5.0, [&] { return suite.ac4(); }},
      {5, "metrics equal exhaustive counting", 60.0, [&] { return suite.ac5(); }},
      {6, "end-to-end toy learning", 0.0, [&] { return suite.ac6(); }},
      {7, "supervision ordering BoW >= visual >= random", 0.0, [&] { return suite.ac7(); }},
      {8, "cross-lingual warm start >= scratch", 0.0, [&] { return suite.ac8(); }},
      {9, "localisation bounded by detection", 0.0, [&] { return suite.ac9(); }},
      {10, "normalised kappa suite", 5.0, [&] { return suite.ac10(); }},
      {11, "byte-identical repeated run", 0.0, [&] { return suite.ac11(); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  std::vector<std::string> lines;
  bool all_pass = true;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    std::cerr << "AC" << c.id << ": " << c.title << "\n";
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
      if (c.prepare) {
        c.prepare();
        t0 = std::chrono::steady_clock::now();
      }
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit_s > 0.0 && s > c.time_limit_s) {
      o.pass = false;
      o.detail += " (over the " + fmt(c.time_limit_s, 3) + " s limit)";
    }
    all_pass = all_pass && o.pass;
    std::ostringstream line;
    line << "AC" << c.id << (c.id < 10 ? "  " : " ") << (o.pass ? "PASS" : "FAIL") << "  " << c.title << ": "
         << o.detail << " [" << fmt(s, 3) << " s]";
    std::cerr << "  " << line.str() << "\n";
    lines.push_back(line.str());
  }
  for (const auto& l : lines) std::cout << l << "\n";
  return all_pass ? 0 : 1;
}
