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

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace vgskws {

struct EvalConfig {
  double theta = 0.5;
  bool per_keyword = true;
  void validate() const;
};

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Intervals = std::vector<std::pair<double, double>>;
/// intervals[n][w]: ground-truth occurrences of keyword w in utterance n.
using IntervalTable = std::vector<std::vector<Intervals>>;

/// Precision/recall/F1 with explicit undefined states.
struct Prf {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;

  static Prf from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
};

/// Macro average over keywords with defined values, with undefined counts.
struct MacroPrf {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::size_t undefined_precision = 0;
  std::size_t undefined_recall = 0;
  std::size_t undefined_f1 = 0;
  /// Mean of 2TP / (2TP + FP + FN) over keywords with TP + FP + FN > 0, so
  /// a keyword that is present but never detected contributes 0.
  std::optional<double> f1_strict;
};

struct PrfResult {
  std::vector<Prf> per_keyword;
  MacroPrf macro;
  Prf micro;
};

/// Decision y_hat >= theta against presence; scores and presence are N x V.
PrfResult eval_detection(const Eigen::MatrixXd& scores, const BoolMatrix& presence, double theta);

struct SpottingResult {
  std::optional<double> p_at_10;
  std::optional<double> p_at_n;
  std::optional<double> eer;
};

/// Ranking order: score descending, then utterance id ascending.
std::vector<std::size_t> spotting_rank(const Eigen::VectorXd& scores, const std::vector<std::string>& ids);

/// P@10 (needs >= 10 utterances), P@N (N = positives >= 1) and EER (needs
/// positives and negatives) for one keyword.
SpottingResult eval_spotting(const Eigen::VectorXd& scores, const std::vector<bool>& presence,
                             const std::vector<std::string>& ids);

/// FAR = FRR crossing of the threshold sweep, linearly interpolated.
std::optional<double> equal_error_rate(const Eigen::VectorXd& scores, const std::vector<bool>& presence);

/// Closed-interval membership.
bool inside_any(double tau, const Intervals& intervals);

struct OracleResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::optional<double> accuracy;            // correct / total over all pairs
  std::vector<std::optional<double>> per_keyword;
};

/// Over (utterance, keyword) pairs with presence set.  tau is N x V.
/// Throws MissingAlignmentError when a present pair has no interval.
OracleResult eval_oracle_localisation(const Eigen::MatrixXd& tau, const BoolMatrix& presence,
                                      const IntervalTable& intervals,
                                      const std::vector<std::string>& ids = {});

/// Detected (y_hat >= theta) pairs are TP only when present and localised
/// inside an occurrence, else FP; undetected present pairs are FN.
PrfResult eval_actual_localisation(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& tau,
                                   const BoolMatrix& presence, const IntervalTable& intervals,
                                   double theta);

/// Top-ranked utterances count only when present and localised correctly.
SpottingResult eval_spotting_localisation(const Eigen::VectorXd& scores, const Eigen::VectorXd& tau,
                                          const std::vector<bool>& presence,
                                          const std::vector<Intervals>& intervals,
                                          const std::vector<std::string>& ids);

/// Expected oracle accuracy of a uniformly random time point: mean over
/// present pairs of covered duration / utterance duration.
double random_localisation_baseline(const BoolMatrix& presence, const IntervalTable& intervals,
                                    const std::vector<double>& durations_s);

/// Expected macro F1 of a detector firing independently with probability
/// equal to each keyword's prevalence (equals the mean prevalence).
double random_detection_baseline(const BoolMatrix& presence);

/// Everything an evaluation needs, independent of how it was produced.
struct EvalInput {
  std::vector<std::string> keywords;
  std::vector<std::string> utt_ids;
  std::vector<double> durations_s;
  Eigen::MatrixXd scores;  // N x V
  BoolMatrix presence;     // N x V
  IntervalTable intervals;
  /// method name -> tau (N x V); NaN for pairs that were not localised.
  std::map<std::string, Eigen::MatrixXd> tau;
};

/// Full report as JSON.  Keys are emitted in a fixed order and undefined
/// values are null, so the serialisation is deterministic.
nlohmann::ordered_json build_report(const EvalInput& input, const EvalConfig& cfg);

/// keyword,metric,value,support rows.
std::string report_csv(const nlohmann::ordered_json& report);

}  // namespace vgskws
