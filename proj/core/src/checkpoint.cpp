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
#include <cstring>
#include <fstream>

#include "vgskws/error.hpp"
#include "vgskws/train.hpp"

namespace vgskws {

namespace {

constexpr char kMagic[4] = {'V', 'G', 'S', 'C'};
constexpr std::uint32_t kVersion = 1;

std::filesystem::path with_suffix(const std::filesystem::path& base, const char* ext) {
  return std::filesystem::path(base.string() + ext);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& file) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("checkpoint", file + ": truncated");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in, const std::string& file) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("checkpoint", file + ": truncated");
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = bits << 8 | b[i];
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string shape_str(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

void save_checkpoint(const Model& model, const CheckpointMeta& meta, const std::filesystem::path& base) {
  if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
  const auto bin = with_suffix(base, ".bin");
  {
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw IoError("checkpoint", "cannot write " + bin.string());
    const auto& p = model.params();
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string& name = p.name(i);
      put_u32(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put_u32(out, static_cast<std::uint32_t>(p[i].rows()));
      put_u32(out, static_cast<std::uint32_t>(p[i].cols()));
      for (Eigen::Index k = 0; k < p[i].size(); ++k) put_f64(out, p[i].data()[k]);
    }
    if (!out) throw IoError("checkpoint", "failed writing " + bin.string());
  }
  nlohmann::json side{{"format", "vgskws-checkpoint"},
                      {"version", kVersion},
                      {"model", model.config()},
                      {"vocabulary_hash", meta.vocabulary_hash},
                      {"seed", meta.seed},
                      {"epoch", meta.epoch},
                      {"dev_metric", meta.dev_metric},
                      {"parameter_hash", parameter_hash(model.params())}};
  const auto json_path = with_suffix(base, ".json");
  std::ofstream out(json_path);
  if (!out) throw IoError("checkpoint", "cannot write " + json_path.string());
  out << side.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& base) {
  const auto json_path = with_suffix(base, ".json");
  std::ifstream jin(json_path);
  if (!jin) throw IoError("checkpoint", "cannot read " + json_path.string());
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(jin);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(json_path.string(), 0, e.what());
  }
  CheckpointMeta meta;
  meta.model = side.at("model").get<ModelConfig>();
  meta.vocabulary_hash = side.value("vocabulary_hash", std::string());
  meta.seed = side.value("seed", std::uint64_t{0});
  meta.epoch = side.value("epoch", 0);
  meta.dev_metric = side.value("dev_metric", 0.0);
  Model model(meta.model);

  const auto bin = with_suffix(base, ".bin");
  const std::string file = bin.string();
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw IoError("checkpoint", "cannot read " + file);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw IoError("checkpoint", file + ": bad magic");
  if (get_u32(in, file) != kVersion) throw IoError("checkpoint", file + ": unsupported version");
  const std::uint32_t count = get_u32(in, file);
  auto& p = model.params();
  if (count != p.size())
    throw ShapeError("checkpoint", file + ": " + std::to_string(count) + " tensors, model has " +
                                       std::to_string(p.size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = get_u32(in, file);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw IoError("checkpoint", file + ": truncated");
    const std::uint32_t rows = get_u32(in, file);
    const std::uint32_t cols = get_u32(in, file);
    auto& m = p[p.find(name)];
    if (m.rows() != rows || m.cols() != cols)
      throw ShapeError("checkpoint", file + ": tensor '" + name + "' is " + std::to_string(rows) + "x" +
                                         std::to_string(cols) + ", model expects " + shape_str(m));
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = get_f64(in, file);
  }
  return Checkpoint{std::move(model), std::move(meta)};
}

WarmStartMode parse_warm_start_mode(const std::string& text) {
  if (text == "all") return WarmStartMode::kAll;
  if (text == "encoder_only") return WarmStartMode::kEncoderOnly;
  throw ConfigError("unknown warm-start mode '" + text + "' (expected all or encoder_only)");
}

Model warm_start(Model model, const Checkpoint& checkpoint, WarmStartMode mode, const std::string& vocabulary_hash) {
  const auto& src = checkpoint.model.params();
  auto& dst = model.params();
  if (mode == WarmStartMode::kAll) {
    if (checkpoint.model.config().architecture != model.config().architecture)
      throw ShapeError("warm_start", "checkpoint architecture " + to_string(checkpoint.model.config().architecture) +
                                         " differs from " + to_string(model.config().architecture));
    if (src.size() != dst.size()) throw ShapeError("warm_start", "checkpoint has a different parameter layout");
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const std::string& name = dst.name(i);
    if (mode == WarmStartMode::kEncoderOnly && name.rfind("enc.", 0) != 0) continue;
    const auto& names = src.names();
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw ShapeError("warm_start", "checkpoint lacks tensor '" + name + "'");
    const auto& s = src[src.find(name)];
    if (s.rows() != dst[i].rows() || s.cols() != dst[i].cols())
      throw ShapeError("warm_start", "tensor '" + name + "' is " + shape_str(s) + " in the checkpoint, " +
                                         shape_str(dst[i]) + " in the model");
  }
  if (mode == WarmStartMode::kAll && checkpoint.meta.vocabulary_hash != vocabulary_hash)
    throw VocabularyError("warm start with mode=all needs the same vocabulary (checkpoint " +
                          checkpoint.meta.vocabulary_hash + ", corpus " + vocabulary_hash + ")");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const std::string& name = dst.name(i);
    if (mode == WarmStartMode::kEncoderOnly && name.rfind("enc.", 0) != 0) continue;
    dst[i] = src[src.find(name)];
  }
  return model;
}

}  // namespace vgskws
