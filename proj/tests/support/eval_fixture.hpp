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

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vgskws/eval.hpp"
#include "vgskws/rng.hpp"

namespace vgskws::oracle {

struct RandomCorpus {
  EvalInput input;
  double theta = 0.5;
  // items[w][n]
  std::vector<std::vector<Item>> items;
};

inline RandomCorpus random_corpus(Rng& rng, int max_utterances = 50, int max_keywords = 5) {
  RandomCorpus c;
  const int N = uniform_int(rng, 1, max_utterances);
  const int V = uniform_int(rng, 1, max_keywords);
  const bool coarse = uniform01(rng) < 0.5;
  auto& in = c.input;
  for (int w = 0; w < V; ++w) in.keywords.push_back("kw" + std::to_string(w));
  in.scores.resize(N, V);
  in.presence.resize(N, V);
  in.intervals.assign(static_cast<std::size_t>(N), std::vector<Intervals>(static_cast<std::size_t>(V)));
  Eigen::MatrixXd tau(N, V);
  c.items.assign(static_cast<std::size_t>(V), {});
  for (int n = 0; n < N; ++n) {
    char id[24];
    std::snprintf(id, sizeof id, "u%06d_%02d", uniform_int(rng, 0, 999999), n);
    in.utt_ids.push_back(id);
    const double dur = 0.5 + 2.0 * uniform01(rng);
    in.durations_s.push_back(dur);
    for (int w = 0; w < V; ++w) {
      const bool present = uniform01(rng) < 0.35;
      const double score = coarse ? uniform_int(rng, 0, 10) / 10.0 : uniform01(rng);
      Intervals iv;
      if (present) {
        const int k = uniform_int(rng, 1, 2);
        for (int j = 0; j < k; ++j) {
          const double a = uniform01(rng) * (dur - 0.2);
          iv.push_back({a, a + 0.05 + 0.15 * uniform01(rng)});
        }
      }
      double t = uniform01(rng) * dur;
      if (!iv.empty() && uniform01(rng) < 0.2) t = uniform01(rng) < 0.5 ? iv.front().first : iv.front().second;
      if (uniform01(rng) < 0.05) t = NAN;
      in.scores(n, w) = score;
      in.presence(n, w) = present;
      in.intervals[static_cast<std::size_t>(n)][static_cast<std::size_t>(w)] = iv;
      tau(n, w) = t;
      Item it{id, score, present, t, {}};
      for (const auto& [a, b] : iv) it.intervals.push_back({a, b});
      c.items[static_cast<std::size_t>(w)].push_back(it);
    }
  }
  in.tau["m"] = tau;
  return c;
}

inline bool same(const std::optional<double>& a, const std::optional<double>& b, double tol = 0.0) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return tol == 0.0 ? *a == *b : std::abs(*a - *b) <= tol;
}

// Compares every library metric on `c` with the exhaustive oracle and
// returns a description of each mismatch.
inline std::vector<std::string> compare_with_oracle(const RandomCorpus& c) {
  std::vector<std::string> bad;
  const auto& in = c.input;
  const Eigen::MatrixXd& tau = in.tau.at("m");
  const auto det = eval_detection(in.scores, in.presence, c.theta);
  const auto act = eval_actual_localisation(in.scores, tau, in.presence, in.intervals, c.theta);
  const auto orc = eval_oracle_localisation(tau, in.presence, in.intervals, in.utt_ids);
  long correct = 0, total = 0;
  for (std::size_t w = 0; w < in.keywords.size(); ++w) {
    const auto& items = c.items[w];
    auto report = [&](const std::string& what) {
      std::ostringstream o;
      o << what << " mismatch for keyword " << w;
      bad.push_back(o.str());
    };
    const Counts d = detection_counts(items, c.theta);
    const Prf& pd = det.per_keyword[w];
    if (long(pd.tp) != d.tp || long(pd.fp) != d.fp || long(pd.fn) != d.fn) report("detection counts");
    if (!same(pd.precision, d.precision()) || !same(pd.recall, d.recall()) || !same(pd.f1, d.f1())) report("detection P/R/F1");

    const Counts a = actual_counts(items, c.theta);
    const Prf& pa = act.per_keyword[w];
    if (long(pa.tp) != a.tp || long(pa.fp) != a.fp || long(pa.fn) != a.fn) report("actual counts");
    if (!same(pa.precision, a.precision()) || !same(pa.recall, a.recall()) || !same(pa.f1, a.f1())) report("actual P/R/F1");

    if (!same(orc.per_keyword[w], oracle_accuracy(items))) report("oracle accuracy");
    for (const auto& i : items) {
      if (!i.present) continue;
      ++total;
      correct += hits(i);
    }

    Eigen::VectorXd scores(static_cast<Eigen::Index>(items.size())), t(static_cast<Eigen::Index>(items.size()));
    std::vector<bool> pres;
    std::vector<Intervals> iv;
    for (std::size_t n = 0; n < items.size(); ++n) {
      scores[static_cast<Eigen::Index>(n)] = items[n].score;
      t[static_cast<Eigen::Index>(n)] = items[n].tau;
      pres.push_back(items[n].present);
      iv.push_back(in.intervals[n][w]);
    }
    const auto sp = eval_spotting(scores, pres, in.utt_ids);
    if (!same(sp.p_at_10, p_at_10(items))) report("P@10");
    if (!same(sp.p_at_n, p_at_n(items))) report("P@N");
    if (!same(sp.eer, eer(items), 1e-12)) report("EER");
    const auto sl = eval_spotting_localisation(scores, t, pres, iv, in.utt_ids);
    if (!same(sl.p_at_10, loc_p_at_10(items))) report("localisation P@10");
    if (!same(sl.p_at_n, loc_p_at_n(items))) report("localisation P@N");
  }
  if (long(orc.correct) != correct || long(orc.total) != total) bad.push_back("oracle totals mismatch");

  Counts micro;
  for (const auto& items : c.items) {
    const Counts d = detection_counts(items, c.theta);
    micro.tp += d.tp;
    micro.fp += d.fp;
    micro.fn += d.fn;
  }
  if (!same(det.micro.f1, micro.f1())) bad.push_back("micro F1 mismatch");

  double sum = 0.0;
  int defined = 0, undefined = 0;
  for (const auto& items : c.items) {
    const Counts d = detection_counts(items, c.theta);
    if (!d.precision()) {
      ++undefined;
      continue;
    }
    if (d.f1()) sum += *d.f1(), ++defined;
  }
  if (!same(det.macro.f1, defined ? std::optional<double>(sum / defined) : std::nullopt, 1e-12))
    bad.push_back("macro F1 mismatch");
  if (static_cast<int>(det.macro.undefined_precision) != undefined) bad.push_back("undefined precision count mismatch");
  return bad;
}

}  // namespace vgskws::oracle
