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

#include "vgskws/localise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vgskws/error.hpp"

namespace vgskws {

std::string to_string(LocMethod m) {
  switch (m) {
    case LocMethod::kGradCam: return "gradcam";
    case LocMethod::kScoreAgg: return "score_agg";
    case LocMethod::kAttention: return "attention";
    case LocMethod::kMaskedIn: return "masked_in";
    case LocMethod::kMaskedOut: return "masked_out";
  }
  return "?";
}

LocMethod parse_loc_method(const std::string& text) {
  for (LocMethod m : {LocMethod::kGradCam, LocMethod::kScoreAgg, LocMethod::kAttention, LocMethod::kMaskedIn,
                      LocMethod::kMaskedOut}) {
    if (text == to_string(m)) return m;
  }
  throw ConfigError("unknown localisation method '" + text + "'");
}

bool supports(Architecture a, LocMethod m) {
  switch (m) {
    case LocMethod::kScoreAgg: return a == Architecture::kPsc;
    case LocMethod::kAttention: return uses_attention(a);
    default: return true;
  }
}

namespace {

void check_keyword(std::size_t w, Eigen::Index V) {
  if (w >= static_cast<std::size_t>(V))
    throw RangeError("localise", "keyword index " + std::to_string(w) + " out of range (V=" + std::to_string(V) + ")");
}

// Step times, kept inside the utterance when the last pooled block is partial.
std::vector<double> step_times(const ForwardTrace& trace, Eigen::Index steps) {
  const double end = static_cast<double>(trace.input_frames) * trace.frame_hop_s;
  std::vector<double> times(static_cast<std::size_t>(steps));
  for (Eigen::Index t = 0; t < steps; ++t) times[static_cast<std::size_t>(t)] = std::min(trace.time_of(t), end);
  return times;
}

LocalisationScores make_track(LocMethod m, std::size_t w, const Eigen::VectorXd& row, const ForwardTrace& trace) {
  LocalisationScores s;
  s.method = m;
  s.keyword = w;
  s.scores.assign(row.data(), row.data() + row.size());
  s.times_s = step_times(trace, row.size());
  return s;
}

}  // namespace

LocalisationScores locate_attention(const ForwardTrace& trace, std::size_t w) {
  if (!trace.attention)
    throw ConfigError("attention localisation needs an attention model, got " + to_string(trace.architecture));
  check_keyword(w, trace.attention->rows());
  return make_track(LocMethod::kAttention, w, trace.attention->row(static_cast<Eigen::Index>(w)).transpose(), trace);
}

LocalisationScores locate_score_agg(const ForwardTrace& trace, std::size_t w) {
  if (trace.architecture != Architecture::kPsc)
    throw ConfigError("score aggregation localisation needs a PSC model, got " + to_string(trace.architecture));
  check_keyword(w, trace.H.rows());
  return make_track(LocMethod::kScoreAgg, w, trace.H.row(static_cast<Eigen::Index>(w)).transpose(), trace);
}

Eigen::VectorXd gradcam_weights(const Model& model, const Eigen::MatrixXd& H, std::size_t w) {
  check_keyword(w, model.config().vocab_size);
  return model.head_gradient(H, w).rowwise().mean();
}

LocalisationScores locate_gradcam(const Model& model, const ForwardTrace& trace, std::size_t w) {
  const Eigen::VectorXd gamma = gradcam_weights(model, trace.H, w);
  const Eigen::VectorXd raw = (gamma.transpose() * trace.H).transpose();
  return make_track(LocMethod::kGradCam, w, raw.cwiseMax(0.0), trace);
}

LocalisationScores locate_gradcam(const Model& model, const FeatureSequence& f, std::size_t w) {
  return locate_gradcam(model, model.forward(f), w);
}

std::vector<Segment> masking_segments(Eigen::Index frames, double frame_hop_s, const MaskedConfig& cfg) {
  if (!(frame_hop_s > 0.0)) throw RangeError("localise", "frame hop must be > 0");
  if (!(cfg.min_width_s > 0.0) || cfg.max_width_s < cfg.min_width_s || !(cfg.width_step_s > 0.0) ||
      cfg.overlap_s < 0.0 || cfg.overlap_s >= cfg.min_width_s)
    throw ConfigError("masked localisation: inconsistent segment grid");
  const auto to_frames = [&](double s) { return static_cast<Eigen::Index>(std::llround(s / frame_hop_s)); };
  const Eigen::Index min_f = std::max<Eigen::Index>(1, to_frames(cfg.min_width_s));
  if (frames < min_f)
    throw RangeError("localise", "utterance of " + std::to_string(static_cast<double>(frames) * frame_hop_s) +
                                     " s is shorter than the minimum segment width " +
                                     std::to_string(cfg.min_width_s) + " s");
  std::vector<Segment> segs;
  for (int k = 0;; ++k) {
    const double width_s = cfg.min_width_s + k * cfg.width_step_s;
    if (width_s > cfg.max_width_s + 1e-9) break;
    const Eigen::Index width = to_frames(width_s);
    if (width >= frames) {
      segs.push_back({0, frames});
      continue;
    }
    const Eigen::Index stride = std::max<Eigen::Index>(1, to_frames(width_s - cfg.overlap_s));
    Eigen::Index start = 0;
    Eigen::Index last_end = 0;
    for (; start + width <= frames; start += stride) {
      segs.push_back({start, start + width});
      last_end = start + width;
    }
    if (last_end < frames) {
      if (frames - start >= min_f)
        segs.push_back({start, frames});
      else
        segs.push_back({frames - width, frames});
    }
  }
  std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) {
    const auto ma = a.start + a.end;
    const auto mb = b.start + b.end;
    if (ma != mb) return ma < mb;
    if (a.end - a.start != b.end - b.start) return a.end - a.start < b.end - b.start;
    return a.start < b.start;
  });
  segs.erase(std::unique(segs.begin(), segs.end()), segs.end());
  return segs;
}

std::vector<LocalisationScores> locate_masked_all(const Model& model, const FeatureSequence& f, MaskMode mode,
                                                  const MaskedConfig& cfg) {
  validate_features(f);
  const auto segs = masking_segments(f.frames(), f.frame_hop_s, cfg);
  const auto V = static_cast<std::size_t>(model.config().vocab_size);
  const LocMethod method = mode == MaskMode::kIn ? LocMethod::kMaskedIn : LocMethod::kMaskedOut;
  std::vector<LocalisationScores> out(V);
  for (std::size_t w = 0; w < V; ++w) {
    out[w].method = method;
    out[w].keyword = w;
  }
  const Eigen::MatrixXd x = f.values.transpose();
  for (const Segment& s : segs) {
    Eigen::MatrixXd masked;
    if (mode == MaskMode::kIn) {
      masked = Eigen::MatrixXd::Zero(x.rows(), x.cols());
      masked.middleCols(s.start, s.end - s.start) = x.middleCols(s.start, s.end - s.start);
    } else {
      masked = x;
      masked.middleCols(s.start, s.end - s.start).setZero();
    }
    const auto y = model.forward(masked, x.cols(), f.frame_hop_s).y_hat;
    const double mid = 0.5 * static_cast<double>(s.start + s.end) * f.frame_hop_s;
    for (std::size_t w = 0; w < V; ++w) {
      const double p = y[static_cast<Eigen::Index>(w)];
      out[w].scores.push_back(mode == MaskMode::kIn ? p : 1.0 - p);
      out[w].times_s.push_back(mid);
      out[w].spans_s.emplace_back(static_cast<double>(s.start) * f.frame_hop_s,
                                  static_cast<double>(s.end) * f.frame_hop_s);
    }
  }
  return out;
}

LocalisationScores locate_masked(const Model& model, const FeatureSequence& f, std::size_t w, MaskMode mode,
                                 const MaskedConfig& cfg) {
  check_keyword(w, model.config().vocab_size);
  return std::move(locate_masked_all(model, f, mode, cfg)[w]);
}

std::size_t argmax_index(const LocalisationScores& scores) {
  if (scores.scores.empty()) throw RangeError("localise", "empty score track");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.scores.size(); ++i) {
    if (scores.scores[i] > scores.scores[best]) best = i;
  }
  return best;
}

double argmax_location(const LocalisationScores& scores) { return scores.time_of(argmax_index(scores)); }

std::vector<LocalisationScores> localise_all(const Model& model, const FeatureSequence& f, const ForwardTrace& trace,
                                             LocMethod method, const MaskedConfig& mcfg) {
  if (!supports(model.config().architecture, method))
    throw ConfigError("method " + to_string(method) + " does not apply to " + to_string(model.config().architecture));
  const auto V = static_cast<std::size_t>(model.config().vocab_size);
  std::vector<LocalisationScores> out;
  switch (method) {
    case LocMethod::kMaskedIn: return locate_masked_all(model, f, MaskMode::kIn, mcfg);
    case LocMethod::kMaskedOut: return locate_masked_all(model, f, MaskMode::kOut, mcfg);
    case LocMethod::kAttention:
      for (std::size_t w = 0; w < V; ++w) out.push_back(locate_attention(trace, w));
      break;
    case LocMethod::kScoreAgg:
      for (std::size_t w = 0; w < V; ++w) out.push_back(locate_score_agg(trace, w));
      break;
    case LocMethod::kGradCam:
      for (std::size_t w = 0; w < V; ++w) out.push_back(locate_gradcam(model, trace, w));
      break;
  }
  return out;
}

void write_score_dump(const std::vector<ScoreRecord>& records, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("localise", "cannot write " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["utt_id"] = r.utt_id;
    j["keyword"] = r.keyword;
    j["method"] = r.method;
    j["detection_score"] = r.detection_score;
    j["scores"] = r.scores;
    j["times_s"] = r.times_s;
    out << j.dump() << '\n';
  }
}

std::vector<ScoreRecord> read_score_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("localise", "cannot read " + path.string());
  std::vector<ScoreRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ScoreRecord r;
      j.at("utt_id").get_to(r.utt_id);
      j.at("keyword").get_to(r.keyword);
      j.at("method").get_to(r.method);
      j.at("detection_score").get_to(r.detection_score);
      j.at("scores").get_to(r.scores);
      j.at("times_s").get_to(r.times_s);
      if (r.scores.size() != r.times_s.size()) throw ParseError(path.string(), lineno, "scores and times_s differ in length");
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return out;
}

}  // namespace vgskws
