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

#include "vgskws/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "vgskws/error.hpp"

namespace vgskws {

void EvalConfig::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("eval: theta must lie in (0, 1)");
}

Prf Prf::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Prf r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (r.precision && r.recall) {
    const double s = *r.precision + *r.recall;
    r.f1 = s > 0.0 ? 2.0 * *r.precision * *r.recall / s : 0.0;
  }
  return r;
}

namespace {

// Keywords with undefined precision are left out of every macro average.
MacroPrf macro_of(const std::vector<Prf>& per) {
  MacroPrf m;
  double sp = 0.0, sr = 0.0, sf = 0.0, ss = 0.0;
  std::size_t np = 0, nr = 0, nf = 0, ns = 0;
  for (const auto& p : per) {
    if (p.tp + p.fp + p.fn > 0) {
      ss += 2.0 * static_cast<double>(p.tp) / static_cast<double>(2 * p.tp + p.fp + p.fn);
      ++ns;
    }
    if (!p.precision) {
      ++m.undefined_precision;
      if (!p.recall) ++m.undefined_recall;
      ++m.undefined_f1;
      continue;
    }
    sp += *p.precision;
    ++np;
    if (p.recall) {
      sr += *p.recall;
      ++nr;
    } else {
      ++m.undefined_recall;
    }
    if (p.f1) {
      sf += *p.f1;
      ++nf;
    } else {
      ++m.undefined_f1;
    }
  }
  if (np) m.precision = sp / static_cast<double>(np);
  if (nr) m.recall = sr / static_cast<double>(nr);
  if (nf) m.f1 = sf / static_cast<double>(nf);
  if (ns) m.f1_strict = ss / static_cast<double>(ns);
  return m;
}

PrfResult finish(std::vector<Prf> per) {
  PrfResult r;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& p : per) {
    tp += p.tp;
    fp += p.fp;
    fn += p.fn;
  }
  r.macro = macro_of(per);
  r.micro = Prf::from_counts(tp, fp, fn);
  r.per_keyword = std::move(per);
  return r;
}

void check_shapes(const Eigen::MatrixXd& a, const BoolMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("eval", std::string(what) + " is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                 ", presence is " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

void check_intervals(const IntervalTable& intervals, const BoolMatrix& presence) {
  if (static_cast<Eigen::Index>(intervals.size()) != presence.rows())
    throw ShapeError("eval", "interval table covers " + std::to_string(intervals.size()) + " utterances, expected " +
                                 std::to_string(presence.rows()));
  for (const auto& row : intervals) {
    if (static_cast<Eigen::Index>(row.size()) != presence.cols())
      throw ShapeError("eval", "interval table row has " + std::to_string(row.size()) + " keywords, expected " +
                                   std::to_string(presence.cols()));
  }
}

std::optional<double> nonfinite_to_null(double v) {
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

PrfResult eval_detection(const Eigen::MatrixXd& scores, const BoolMatrix& presence, double theta) {
  check_shapes(scores, presence, "scores");
  std::vector<Prf> per;
  for (Eigen::Index w = 0; w < scores.cols(); ++w) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (Eigen::Index n = 0; n < scores.rows(); ++n) {
      if (!std::isfinite(scores(n, w))) throw RangeError("eval", "missing or non-finite detection score");
      const bool detected = scores(n, w) >= theta;
      if (detected && presence(n, w)) ++tp;
      else if (detected) ++fp;
      else if (presence(n, w)) ++fn;
    }
    per.push_back(Prf::from_counts(tp, fp, fn));
  }
  return finish(std::move(per));
}

std::vector<std::size_t> spotting_rank(const Eigen::VectorXd& scores, const std::vector<std::string>& ids) {
  if (static_cast<std::size_t>(scores.size()) != ids.size())
    throw ShapeError("eval", "scores and utterance ids differ in length");
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = scores[static_cast<Eigen::Index>(a)];
    const double sb = scores[static_cast<Eigen::Index>(b)];
    if (sa != sb) return sa > sb;
    return ids[a] < ids[b];
  });
  return order;
}

std::optional<double> equal_error_rate(const Eigen::VectorXd& scores, const std::vector<bool>& presence) {
  if (static_cast<std::size_t>(scores.size()) != presence.size())
    throw ShapeError("eval", "scores and presence differ in length");
  const std::size_t pos = static_cast<std::size_t>(std::count(presence.begin(), presence.end(), true));
  const std::size_t neg = presence.size() - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  std::vector<double> thresholds(scores.data(), scores.data() + scores.size());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  double prev_far = 1.0, prev_frr = 0.0;
  for (double th : thresholds) {
    std::size_t fa = 0, fr = 0;
    for (std::size_t i = 0; i < presence.size(); ++i) {
      const bool accept = scores[static_cast<Eigen::Index>(i)] >= th;
      if (accept && !presence[i]) ++fa;
      if (!accept && presence[i]) ++fr;
    }
    const double far = static_cast<double>(fa) / static_cast<double>(neg);
    const double frr = static_cast<double>(fr) / static_cast<double>(pos);
    if (far <= frr) {
      const double d_prev = prev_far - prev_frr;
      const double d = far - frr;
      if (d == 0.0 || d_prev == d) return far;
      const double lambda = d_prev / (d_prev - d);
      return prev_far + lambda * (far - prev_far);
    }
    prev_far = far;
    prev_frr = frr;
  }
  return 0.5;
}

SpottingResult eval_spotting(const Eigen::VectorXd& scores, const std::vector<bool>& presence,
                             const std::vector<std::string>& ids) {
  if (presence.size() != ids.size()) throw ShapeError("eval", "presence and utterance ids differ in length");
  const auto order = spotting_rank(scores, ids);
  const std::size_t pos = static_cast<std::size_t>(std::count(presence.begin(), presence.end(), true));
  SpottingResult r;
  if (order.size() >= 10) {
    std::size_t hits = 0;
    for (std::size_t k = 0; k < 10; ++k) hits += presence[order[k]] ? 1 : 0;
    r.p_at_10 = static_cast<double>(hits) / 10.0;
  }
  if (pos >= 1) {
    std::size_t hits = 0;
    for (std::size_t k = 0; k < pos; ++k) hits += presence[order[k]] ? 1 : 0;
    r.p_at_n = static_cast<double>(hits) / static_cast<double>(pos);
  }
  r.eer = equal_error_rate(scores, presence);
  return r;
}

bool inside_any(double tau, const Intervals& intervals) {
  if (!std::isfinite(tau)) return false;
  return std::any_of(intervals.begin(), intervals.end(),
                     [&](const auto& iv) { return tau >= iv.first && tau <= iv.second; });
}

OracleResult eval_oracle_localisation(const Eigen::MatrixXd& tau, const BoolMatrix& presence,
                                      const IntervalTable& intervals, const std::vector<std::string>& ids) {
  check_shapes(tau, presence, "tau");
  check_intervals(intervals, presence);
  OracleResult r;
  for (Eigen::Index w = 0; w < tau.cols(); ++w) {
    std::size_t correct = 0, total = 0;
    for (Eigen::Index n = 0; n < tau.rows(); ++n) {
      if (!presence(n, w)) continue;
      const auto& iv = intervals[static_cast<std::size_t>(n)][static_cast<std::size_t>(w)];
      if (iv.empty()) {
        const std::string id = static_cast<std::size_t>(n) < ids.size() ? ids[static_cast<std::size_t>(n)]
                                                                          : "#" + std::to_string(n);
        throw MissingAlignmentError(id, "keyword " + std::to_string(w) + " is present but has no aligned interval");
      }
      ++total;
      if (inside_any(tau(n, w), iv)) ++correct;
    }
    r.correct += correct;
    r.total += total;
    r.per_keyword.push_back(total ? std::optional<double>(static_cast<double>(correct) / static_cast<double>(total))
                                  : std::nullopt);
  }
  if (r.total) r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

PrfResult eval_actual_localisation(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& tau,
                                   const BoolMatrix& presence, const IntervalTable& intervals, double theta) {
  check_shapes(scores, presence, "scores");
  check_shapes(tau, presence, "tau");
  check_intervals(intervals, presence);
  std::vector<Prf> per;
  for (Eigen::Index w = 0; w < scores.cols(); ++w) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (Eigen::Index n = 0; n < scores.rows(); ++n) {
      const bool detected = scores(n, w) >= theta;
      const bool present = presence(n, w);
      if (detected) {
        if (present && inside_any(tau(n, w), intervals[static_cast<std::size_t>(n)][static_cast<std::size_t>(w)]))
          ++tp;
        else
          ++fp;
      } else if (present) {
        ++fn;
      }
    }
    per.push_back(Prf::from_counts(tp, fp, fn));
  }
  return finish(std::move(per));
}

SpottingResult eval_spotting_localisation(const Eigen::VectorXd& scores, const Eigen::VectorXd& tau,
                                          const std::vector<bool>& presence, const std::vector<Intervals>& intervals,
                                          const std::vector<std::string>& ids) {
  if (presence.size() != ids.size() || intervals.size() != ids.size() ||
      static_cast<std::size_t>(tau.size()) != ids.size())
    throw ShapeError("eval", "spotting localisation inputs differ in length");
  const auto order = spotting_rank(scores, ids);
  const std::size_t pos = static_cast<std::size_t>(std::count(presence.begin(), presence.end(), true));
  const auto hit = [&](std::size_t i) {
    return presence[i] && inside_any(tau[static_cast<Eigen::Index>(i)], intervals[i]);
  };
  SpottingResult r;
  if (order.size() >= 10) {
    std::size_t hits = 0;
    for (std::size_t k = 0; k < 10; ++k) hits += hit(order[k]) ? 1 : 0;
    r.p_at_10 = static_cast<double>(hits) / 10.0;
  }
  if (pos >= 1) {
    std::size_t hits = 0;
    for (std::size_t k = 0; k < pos; ++k) hits += hit(order[k]) ? 1 : 0;
    r.p_at_n = static_cast<double>(hits) / static_cast<double>(pos);
  }
  return r;
}

double random_localisation_baseline(const BoolMatrix& presence, const IntervalTable& intervals,
                                    const std::vector<double>& durations_s) {
  check_intervals(intervals, presence);
  if (static_cast<Eigen::Index>(durations_s.size()) != presence.rows())
    throw ShapeError("eval", "durations do not cover every utterance");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (Eigen::Index n = 0; n < presence.rows(); ++n) {
    const double dur = durations_s[static_cast<std::size_t>(n)];
    for (Eigen::Index w = 0; w < presence.cols(); ++w) {
      if (!presence(n, w)) continue;
      ++pairs;
      if (!(dur > 0.0)) continue;
      auto iv = intervals[static_cast<std::size_t>(n)][static_cast<std::size_t>(w)];
      std::sort(iv.begin(), iv.end());
      double covered = 0.0, reach = 0.0;
      for (auto [a, b] : iv) {
        a = std::clamp(a, 0.0, dur);
        b = std::clamp(b, 0.0, dur);
        a = std::max(a, reach);
        if (b > a) {
          covered += b - a;
          reach = b;
        }
      }
      sum += covered / dur;
    }
  }
  return pairs ? sum / static_cast<double>(pairs) : 0.0;
}

double random_detection_baseline(const BoolMatrix& presence) {
  if (presence.rows() == 0) return 0.0;
  double sum = 0.0;
  std::size_t count = 0;
  for (Eigen::Index w = 0; w < presence.cols(); ++w) {
    const auto k = presence.col(w).count();
    if (k == 0) continue;
    sum += static_cast<double>(k) / static_cast<double>(presence.rows());
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

namespace {

nlohmann::ordered_json opt(const std::optional<double>& v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}

nlohmann::ordered_json prf_json(const Prf& p) {
  nlohmann::ordered_json j;
  j["precision"] = opt(p.precision);
  j["recall"] = opt(p.recall);
  j["f1"] = opt(p.f1);
  j["tp"] = p.tp;
  j["fp"] = p.fp;
  j["fn"] = p.fn;
  j["support"] = p.tp + p.fn;
  return j;
}

nlohmann::ordered_json macro_json(const MacroPrf& m) {
  nlohmann::ordered_json j;
  j["precision"] = opt(m.precision);
  j["recall"] = opt(m.recall);
  j["f1"] = opt(m.f1);
  j["undefined_precision"] = m.undefined_precision;
  j["undefined_recall"] = m.undefined_recall;
  j["undefined_f1"] = m.undefined_f1;
  j["f1_strict"] = opt(m.f1_strict);
  return j;
}

nlohmann::ordered_json prf_result_json(const PrfResult& r, const std::vector<std::string>& keywords, bool per_keyword) {
  nlohmann::ordered_json j;
  j["macro"] = macro_json(r.macro);
  j["micro"] = prf_json(r.micro);
  if (per_keyword) {
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (std::size_t w = 0; w < keywords.size(); ++w) per[keywords[w]] = prf_json(r.per_keyword[w]);
    j["per_keyword"] = std::move(per);
  }
  return j;
}

struct MeanAcc {
  double sum = 0.0;
  std::size_t n = 0;
  std::size_t undefined = 0;
  void add(const std::optional<double>& v) {
    if (v) {
      sum += *v;
      ++n;
    } else {
      ++undefined;
    }
  }
  std::optional<double> mean() const { return n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt; }
};

nlohmann::ordered_json spotting_json(const std::vector<SpottingResult>& per, const std::vector<std::string>& keywords,
                                     const std::vector<std::size_t>& support, bool per_keyword, bool with_eer) {
  MeanAcc p10, pn, eer;
  for (const auto& s : per) {
    p10.add(s.p_at_10);
    pn.add(s.p_at_n);
    eer.add(s.eer);
  }
  nlohmann::ordered_json j;
  nlohmann::ordered_json m;
  m["p_at_10"] = opt(p10.mean());
  m["p_at_n"] = opt(pn.mean());
  if (with_eer) m["eer"] = opt(eer.mean());
  m["undefined_p_at_10"] = p10.undefined;
  m["undefined_p_at_n"] = pn.undefined;
  if (with_eer) m["undefined_eer"] = eer.undefined;
  j["macro"] = std::move(m);
  if (per_keyword) {
    nlohmann::ordered_json pk = nlohmann::ordered_json::object();
    for (std::size_t w = 0; w < keywords.size(); ++w) {
      nlohmann::ordered_json e;
      e["p_at_10"] = opt(per[w].p_at_10);
      e["p_at_n"] = opt(per[w].p_at_n);
      if (with_eer) e["eer"] = opt(per[w].eer);
      e["support"] = support[w];
      pk[keywords[w]] = std::move(e);
    }
    j["per_keyword"] = std::move(pk);
  }
  return j;
}

}  // namespace

nlohmann::ordered_json build_report(const EvalInput& in, const EvalConfig& cfg) {
  cfg.validate();
  const auto N = static_cast<Eigen::Index>(in.utt_ids.size());
  const auto V = static_cast<Eigen::Index>(in.keywords.size());
  if (in.scores.rows() != N || in.scores.cols() != V)
    throw ShapeError("eval", "scores must be " + std::to_string(N) + "x" + std::to_string(V));
  check_shapes(in.scores, in.presence, "scores");

  nlohmann::ordered_json report;
  report["theta"] = cfg.theta;
  report["utterances"] = N;
  report["keywords"] = in.keywords;

  const auto detection = eval_detection(in.scores, in.presence, cfg.theta);
  report["detection"] = prf_result_json(detection, in.keywords, cfg.per_keyword);

  std::vector<SpottingResult> spotting;
  std::vector<std::size_t> support(static_cast<std::size_t>(V), 0);
  std::vector<std::vector<bool>> pres_cols(static_cast<std::size_t>(V));
  for (Eigen::Index w = 0; w < V; ++w) {
    auto& col = pres_cols[static_cast<std::size_t>(w)];
    for (Eigen::Index n = 0; n < N; ++n) col.push_back(in.presence(n, w));
    support[static_cast<std::size_t>(w)] = static_cast<std::size_t>(std::count(col.begin(), col.end(), true));
    spotting.push_back(eval_spotting(in.scores.col(w), col, in.utt_ids));
  }
  report["spotting"] = spotting_json(spotting, in.keywords, support, cfg.per_keyword, true);

  const bool have_intervals = !in.intervals.empty();
  nlohmann::ordered_json loc = nlohmann::ordered_json::object();
  if (have_intervals) {
    for (const auto& [method, tau] : in.tau) {
      nlohmann::ordered_json mj;
      const auto oracle = eval_oracle_localisation(tau, in.presence, in.intervals, in.utt_ids);
      nlohmann::ordered_json oj;
      oj["accuracy"] = opt(oracle.accuracy);
      oj["correct"] = oracle.correct;
      oj["total"] = oracle.total;
      if (cfg.per_keyword) {
        nlohmann::ordered_json pk = nlohmann::ordered_json::object();
        for (Eigen::Index w = 0; w < V; ++w) pk[in.keywords[static_cast<std::size_t>(w)]] = opt(oracle.per_keyword[static_cast<std::size_t>(w)]);
        oj["per_keyword"] = std::move(pk);
      }
      mj["oracle"] = std::move(oj);
      mj["actual"] =
          prf_result_json(eval_actual_localisation(in.scores, tau, in.presence, in.intervals, cfg.theta), in.keywords,
                          cfg.per_keyword);
      std::vector<SpottingResult> spotloc;
      for (Eigen::Index w = 0; w < V; ++w) {
        std::vector<Intervals> iv;
        for (Eigen::Index n = 0; n < N; ++n) iv.push_back(in.intervals[static_cast<std::size_t>(n)][static_cast<std::size_t>(w)]);
        spotloc.push_back(eval_spotting_localisation(in.scores.col(w), tau.col(w), pres_cols[static_cast<std::size_t>(w)], iv,
                                                     in.utt_ids));
      }
      mj["spotting"] = spotting_json(spotloc, in.keywords, support, cfg.per_keyword, false);
      loc[method] = std::move(mj);
    }
  }
  report["localisation"] = std::move(loc);

  nlohmann::ordered_json base;
  base["random_detection_f1"] = random_detection_baseline(in.presence);
  if (have_intervals && static_cast<Eigen::Index>(in.durations_s.size()) == N)
    base["random_localisation"] = nonfinite_to_null(random_localisation_baseline(in.presence, in.intervals, in.durations_s))
                                      .value_or(0.0);
  else
    base["random_localisation"] = nullptr;
  report["baselines"] = std::move(base);
  return report;
}

namespace {

std::string csv_value(const nlohmann::ordered_json& v) {
  if (v.is_null()) return "";
  std::ostringstream os;
  os.precision(17);
  os << v.get<double>();
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string report_csv(const nlohmann::ordered_json& report) {
  std::ostringstream os;
  os << "keyword,metric,value,support\n";
  const auto row = [&](const std::string& kw, const std::string& metric, const nlohmann::ordered_json& v,
                       const nlohmann::ordered_json& support) {
    os << csv_field(kw) << ',' << csv_field(metric) << ',' << csv_value(v) << ',';
    if (!support.is_null()) os << support.get<std::size_t>();
    os << '\n';
  };
  const auto& det = report.at("detection");
  for (const char* m : {"precision", "recall", "f1", "f1_strict"})
    row("(macro)", std::string("detection_") + m, det.at("macro").at(m), nullptr);
  if (det.contains("per_keyword")) {
    for (const auto& [kw, e] : det.at("per_keyword").items()) {
      for (const char* m : {"precision", "recall", "f1"}) row(kw, std::string("detection_") + m, e.at(m), e.at("support"));
    }
  }
  const auto& sp = report.at("spotting");
  for (const char* m : {"p_at_10", "p_at_n", "eer"}) row("(macro)", m, sp.at("macro").at(m), nullptr);
  if (sp.contains("per_keyword")) {
    for (const auto& [kw, e] : sp.at("per_keyword").items()) {
      for (const char* m : {"p_at_10", "p_at_n", "eer"}) row(kw, m, e.at(m), e.at("support"));
    }
  }
  for (const auto& [method, mj] : report.at("localisation").items()) {
    row("(macro)", method + ".oracle_acc", mj.at("oracle").at("accuracy"), mj.at("oracle").at("total"));
    for (const char* m : {"precision", "recall", "f1"})
      row("(macro)", method + ".actual_" + m, mj.at("actual").at("macro").at(m), nullptr);
    row("(macro)", method + ".spotloc_p_at_10", mj.at("spotting").at("macro").at("p_at_10"), nullptr);
    if (mj.at("oracle").contains("per_keyword")) {
      for (const auto& [kw, v] : mj.at("oracle").at("per_keyword").items()) {
        row(kw, method + ".oracle_acc", v, report.at("spotting").at("per_keyword").at(kw).at("support"));
        const auto& a = mj.at("actual").at("per_keyword").at(kw);
        for (const char* m : {"precision", "recall", "f1"}) row(kw, method + ".actual_" + m, a.at(m), a.at("support"));
        const auto& s = mj.at("spotting").at("per_keyword").at(kw);
        row(kw, method + ".spotloc_p_at_10", s.at("p_at_10"), s.at("support"));
      }
    }
  }
  return os.str();
}

}  // namespace vgskws
