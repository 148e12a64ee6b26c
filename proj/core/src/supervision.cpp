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

#include "vgskws/supervision.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "vgskws/error.hpp"

namespace vgskws {

std::string to_string(TargetKind kind) { return kind == TargetKind::kBow ? "bow" : "visual"; }

TargetKind parse_target_kind(const std::string& text) {
  if (text == "bow") return TargetKind::kBow;
  if (text == "visual") return TargetKind::kVisual;
  throw ConfigError("unknown supervision kind '" + text + "' (expected bow or visual)");
}

SupervisionTarget bow_targets(const std::vector<std::string>& transcript, const Vocabulary& vocab) {
  SupervisionTarget t;
  t.kind = TargetKind::kBow;
  t.probs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
  for (const auto& tok : transcript) {
    if (auto w = vocab.find(tok)) t.probs[static_cast<Eigen::Index>(*w)] = 1.0;
  }
  return t;
}

SupervisionTarget load_visual_targets(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("supervision", "cannot open visual tags " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  if (!j.is_object()) throw ParseError(path.string(), 0, "visual tags must be a JSON object");
  SupervisionTarget t;
  t.kind = TargetKind::kVisual;
  t.probs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto w = vocab.find(it.key());
    if (!w) throw VocabularyError(path.string() + ": unknown keyword '" + it.key() + "'");
    if (!it.value().is_number()) throw ParseError(path.string(), 0, "probability for '" + it.key() + "' is not a number");
    const double p = it.value().get<double>();
    if (!(p >= 0.0 && p <= 1.0))
      throw RangeError("supervision", path.string() + ": probability " + std::to_string(p) + " for '" +
                                          it.key() + "' outside [0, 1]");
    t.probs[static_cast<Eigen::Index>(*w)] = p;
  }
  return t;
}

void save_visual_targets(const SupervisionTarget& target, const Vocabulary& vocab,
                         const std::filesystem::path& path) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t w = 0; w < vocab.size(); ++w) j[vocab.keyword(w)] = target.probs[static_cast<Eigen::Index>(w)];
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("supervision", "cannot write " + path.string());
  out << j.dump() << '\n';
}

SupervisionTarget resolve_target(const UtteranceRecord& record, const Vocabulary& vocab, TargetKind kind) {
  if (kind == TargetKind::kBow) {
    if (!record.transcript)
      throw Error("supervision", "record '" + record.id + "' has no transcript for bow targets");
    return bow_targets(*record.transcript, vocab);
  }
  if (!record.visual_tags)
    throw Error("supervision", "record '" + record.id + "' has no visual tags");
  return load_visual_targets(*record.visual_tags, vocab);
}

}  // namespace vgskws
