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

#include "vgskws/model.hpp"

#include <cmath>

#include "vgskws/error.hpp"
#include "vgskws/hash.hpp"

namespace vgskws {

using nn::Index;
using nn::Matrix;
using nn::Vector;

std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::kPsc: return "PSC";
    case Architecture::kCnnPool: return "CNN-Pool";
    case Architecture::kCnnAttend: return "CNN-Attend";
    case Architecture::kCnnPoolAttend: return "CNN-PoolAttend";
  }
  return "?";
}

Architecture parse_architecture(const std::string& text) {
  if (text == "PSC" || text == "psc") return Architecture::kPsc;
  if (text == "CNN-Pool" || text == "cnn-pool") return Architecture::kCnnPool;
  if (text == "CNN-Attend" || text == "cnn-attend") return Architecture::kCnnAttend;
  if (text == "CNN-PoolAttend" || text == "cnn-poolattend") return Architecture::kCnnPoolAttend;
  throw ConfigError("unknown architecture '" + text + "'");
}

bool uses_pooled_encoder(Architecture a) {
  return a == Architecture::kCnnPool || a == Architecture::kCnnPoolAttend;
}

bool uses_attention(Architecture a) {
  return a == Architecture::kCnnAttend || a == Architecture::kCnnPoolAttend;
}

std::vector<int> ModelConfig::resolved_channels() const {
  if (!encoder_channels.empty()) return encoder_channels;
  if (uses_pooled_encoder(architecture)) return {64, 256, 1024};
  std::vector<int> ch{96, 96, 96, 96, 96, 1000};
  if (architecture == Architecture::kPsc) ch.back() = vocab_size;
  return ch;
}

int ModelConfig::resolved_embed_dim() const { return resolved_channels().back(); }

void ModelConfig::validate() const {
  if (vocab_size < 1) throw ConfigError("model: vocab_size must be >= 1");
  if (feature_dim < 1) throw ConfigError("model: feature_dim must be >= 1");
  if (clf_hidden < 1) throw ConfigError("model: clf_hidden must be >= 1");
  const auto ch = resolved_channels();
  const std::size_t expected = uses_pooled_encoder(architecture) ? 3 : 6;
  if (ch.size() != expected)
    throw ConfigError("model: " + to_string(architecture) + " needs " + std::to_string(expected) +
                      " encoder widths, got " + std::to_string(ch.size()));
  for (int c : ch) {
    if (c < 1) throw ConfigError("model: encoder widths must be >= 1");
  }
  if (architecture == Architecture::kPsc) {
    if (ch.back() != vocab_size)
      throw ConfigError("model: PSC needs final encoder channels (" + std::to_string(ch.back()) +
                        ") equal to the vocabulary size (" + std::to_string(vocab_size) + ")");
    if (!(lme_r > 0.0)) throw ConfigError("model: PSC temperature r must be > 0");
  }
  if (embed_dim != 0 && embed_dim != ch.back())
    throw ConfigError("model: embed_dim (" + std::to_string(embed_dim) + ") must equal the encoder output width (" +
                      std::to_string(ch.back()) + ")");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"architecture", to_string(c.architecture)},
                     {"vocab_size", c.vocab_size},
                     {"feature_dim", c.feature_dim},
                     {"lme_r", c.lme_r},
                     {"clf_hidden", c.clf_hidden},
                     {"embed_dim", c.resolved_embed_dim()},
                     {"encoder_channels", c.resolved_channels()},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  if (j.contains("architecture")) c.architecture = parse_architecture(j.at("architecture").get<std::string>());
  if (j.contains("vocab_size")) j.at("vocab_size").get_to(c.vocab_size);
  if (j.contains("feature_dim")) j.at("feature_dim").get_to(c.feature_dim);
  if (j.contains("lme_r")) j.at("lme_r").get_to(c.lme_r);
  if (j.contains("clf_hidden")) j.at("clf_hidden").get_to(c.clf_hidden);
  if (j.contains("embed_dim")) j.at("embed_dim").get_to(c.embed_dim);
  if (j.contains("encoder_channels")) j.at("encoder_channels").get_to(c.encoder_channels);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
}

struct Model::EncoderTape {
  struct Layer {
    Matrix cols;
    Matrix act;  // post-activation, pre-pool
    std::vector<Index> argmax;
    Index input_length = 0;
    Index valid = 0;  // valid columns of `act`
  };
  std::vector<Layer> layers;
  Index output_length = 0;
  Index output_valid = 0;
};

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto ch = cfg_.resolved_channels();
  const bool pooled = uses_pooled_encoder(cfg_.architecture);
  Index in = cfg_.feature_dim;
  for (std::size_t i = 0; i < ch.size(); ++i) {
    EncoderLayer layer;
    layer.conv.in_channels = in;
    layer.conv.out_channels = ch[i];
    layer.conv.kernel = i == 0 ? 9 : 11;
    layer.conv.padding = i == 0 ? 4 : 5;
    const std::string prefix = "enc." + std::to_string(i) + ".";
    layer.conv.weight = params_.add(prefix + "weight", ch[i], in * layer.conv.kernel);
    layer.conv.bias = params_.add(prefix + "bias", ch[i], 1);
    layer.pool = pooled && i < 2;
    // PSC reads the last layer as keyword scores, so it stays linear.
    layer.relu = !(cfg_.architecture == Architecture::kPsc && i + 1 == ch.size());
    encoder_.push_back(layer);
    in = ch[i];
  }
  embed_dim_ = static_cast<int>(in);

  if (cfg_.architecture != Architecture::kPsc) {
    const Index out = uses_attention(cfg_.architecture) ? 1 : cfg_.vocab_size;
    clf_hidden_ = {in, cfg_.clf_hidden, params_.add("clf.0.weight", cfg_.clf_hidden, in),
                   params_.add("clf.0.bias", cfg_.clf_hidden, 1)};
    clf_out_ = {cfg_.clf_hidden, out, params_.add("clf.1.weight", out, cfg_.clf_hidden),
                params_.add("clf.1.bias", out, 1)};
  }
  if (uses_attention(cfg_.architecture)) query_ = params_.add("att.query", cfg_.vocab_size, in);
  initialise(false);
}

void Model::initialise(bool head_only) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string& name = params_.name(i);
    if (head_only && name.rfind("enc.", 0) == 0) continue;
    if (name.ends_with(".bias")) {
      params_[i].setZero();
      continue;
    }
    Rng rng = SeedSequence(cfg_.seed).with(name).rng();
    const double gain = name == "att.query" ? 1.0 : std::sqrt(2.0);
    nn::init_uniform_fan_in(params_[i], params_[i].cols(), gain, rng);
  }
}

void Model::reinitialise_head() { initialise(true); }

int Model::downsample_factor() const { return uses_pooled_encoder(cfg_.architecture) ? 9 : 1; }

Eigen::Index Model::output_length(Eigen::Index frames) const {
  Index t = frames;
  for (const auto& layer : encoder_) {
    t = layer.conv.output_length(t);
    if (layer.pool) t = nn::ceil_div(t, 3);
  }
  return t;
}

Matrix Model::encode_impl(const Matrix& x, Index valid, EncoderTape* tape) const {
  if (x.rows() != cfg_.feature_dim)
    throw ShapeError("model", "feature dimension " + std::to_string(x.rows()) + " does not match model input " +
                                  std::to_string(cfg_.feature_dim));
  if (valid < 1 || valid > x.cols()) throw RangeError("model", "input has no valid frames");
  Matrix cur = x;
  if (valid < cur.cols()) cur.rightCols(cur.cols() - valid).setZero();
  Index cur_valid = valid;
  if (tape) tape->layers.resize(encoder_.size());
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    const auto& layer = encoder_[i];
    Matrix cols;
    Matrix y = layer.conv.forward(params_, cur, tape ? &cols : nullptr);
    if (layer.relu) y = y.cwiseMax(0.0);
    if (cur_valid < y.cols()) y.rightCols(y.cols() - cur_valid).setZero();
    if (tape) {
      auto& t = tape->layers[i];
      t.cols = std::move(cols);
      t.input_length = cur.cols();
      t.valid = cur_valid;
    }
    if (layer.pool) {
      std::vector<Index> argmax;
      Matrix pooled = nn::max_pool_time(y, cur_valid, 3, tape ? &argmax : nullptr);
      if (tape) {
        tape->layers[i].act = std::move(y);
        tape->layers[i].argmax = std::move(argmax);
      }
      cur = std::move(pooled);
      cur_valid = nn::ceil_div(cur_valid, 3);
    } else {
      if (tape) tape->layers[i].act = y;
      cur = std::move(y);
    }
  }
  if (tape) {
    tape->output_length = cur.cols();
    tape->output_valid = cur_valid;
  }
  return cur.leftCols(cur_valid);
}

void Model::encode_backward(const EncoderTape& tape, const Matrix& dH, nn::Gradients& g) const {
  Matrix d = Matrix::Zero(dH.rows(), tape.output_length);
  d.leftCols(dH.cols()) = dH;
  for (std::size_t k = encoder_.size(); k-- > 0;) {
    const auto& layer = encoder_[k];
    const auto& t = tape.layers[k];
    if (layer.pool) d = nn::max_pool_time_backward(d, t.argmax, t.act.cols(), nn::ceil_div(t.valid, 3));
    if (t.valid < d.cols()) d.rightCols(d.cols() - t.valid).setZero();
    if (layer.relu) d = (t.act.array() > 0.0).select(d, 0.0);
    d = layer.conv.backward(params_, t.cols, t.input_length, d, g);
  }
}

Eigen::MatrixXd Model::encode(const Eigen::MatrixXd& x, Eigen::Index valid) const {
  return encode_impl(x, valid, nullptr);
}

Model::HeadOutput Model::head(const Matrix& H) const {
  HeadOutput out;
  switch (cfg_.architecture) {
    case Architecture::kPsc:
      out.logits = nn::log_mean_exp_rows(H, cfg_.lme_r);
      break;
    case Architecture::kCnnPool: {
      const Matrix z = H.rowwise().maxCoeff();
      const Matrix hidden = clf_hidden_.forward(params_, z).cwiseMax(0.0);
      out.logits = clf_out_.forward(params_, hidden).col(0);
      break;
    }
    case Architecture::kCnnAttend:
    case Architecture::kCnnPoolAttend: {
      const Matrix A = nn::softmax_rows(params_[query_] * H);
      const Matrix C = H * A.transpose();
      const Matrix hidden = clf_hidden_.forward(params_, C).cwiseMax(0.0);
      out.logits = clf_out_.forward(params_, hidden).row(0).transpose();
      out.attention = A;
      break;
    }
  }
  return out;
}

Matrix Model::head_backward(const Matrix& H, const Vector& dlogits, nn::Gradients* g) const {
  switch (cfg_.architecture) {
    case Architecture::kPsc: {
      const Matrix P = nn::log_mean_exp_rows_grad(H, cfg_.lme_r);
      return dlogits.asDiagonal() * P;
    }
    case Architecture::kCnnPool: {
      Matrix z(H.rows(), 1);
      std::vector<Index> arg(static_cast<std::size_t>(H.rows()));
      for (Index e = 0; e < H.rows(); ++e) z(e, 0) = H.row(e).maxCoeff(&arg[static_cast<std::size_t>(e)]);
      const Matrix pre = clf_hidden_.forward(params_, z);
      const Matrix hidden = pre.cwiseMax(0.0);
      Matrix dhidden = params_[clf_out_.weight].transpose() * dlogits;
      dhidden = (pre.array() > 0.0).select(dhidden, 0.0);
      const Matrix dz = params_[clf_hidden_.weight].transpose() * dhidden;
      if (g) {
        (*g)[clf_out_.weight].noalias() += dlogits * hidden.transpose();
        (*g)[clf_out_.bias].col(0) += dlogits;
        (*g)[clf_hidden_.weight].noalias() += dhidden * z.transpose();
        (*g)[clf_hidden_.bias] += dhidden;
      }
      Matrix dH = Matrix::Zero(H.rows(), H.cols());
      for (Index e = 0; e < H.rows(); ++e) dH(e, arg[static_cast<std::size_t>(e)]) = dz(e, 0);
      return dH;
    }
    case Architecture::kCnnAttend:
    case Architecture::kCnnPoolAttend: {
      const Matrix& Q = params_[query_];
      const Matrix A = nn::softmax_rows(Q * H);
      const Matrix C = H * A.transpose();
      const Matrix pre = clf_hidden_.forward(params_, C);
      const Matrix hidden = pre.cwiseMax(0.0);
      const Matrix dout = dlogits.transpose();  // 1 x V
      Matrix dhidden = params_[clf_out_.weight].transpose() * dout;
      dhidden = (pre.array() > 0.0).select(dhidden, 0.0);
      const Matrix dC = params_[clf_hidden_.weight].transpose() * dhidden;  // E x V
      Matrix dH = dC * A;
      const Matrix dA = dC.transpose() * H;  // V x T
      const Vector inner = (dA.array() * A.array()).rowwise().sum();
      const Matrix dS = (A.array() * (dA.colwise() - inner).array()).matrix();
      dH.noalias() += Q.transpose() * dS;
      if (g) {
        (*g)[clf_out_.weight].noalias() += dout * hidden.transpose();
        (*g)[clf_out_.bias](0, 0) += dout.sum();
        (*g)[clf_hidden_.weight].noalias() += dhidden * C.transpose();
        (*g)[clf_hidden_.bias].col(0) += dhidden.rowwise().sum();
        (*g)[query_].noalias() += dS * H.transpose();
      }
      return dH;
    }
  }
  return {};
}

ForwardTrace Model::forward(const Eigen::MatrixXd& x, Eigen::Index valid, double frame_hop_s) const {
  ForwardTrace trace;
  trace.H = encode_impl(x, valid, nullptr);
  auto out = head(trace.H);
  trace.logits = std::move(out.logits);
  trace.y_hat = trace.logits.unaryExpr([](double v) { return nn::sigmoid(v); });
  trace.attention = std::move(out.attention);
  trace.architecture = cfg_.architecture;
  trace.downsample_factor = downsample_factor();
  trace.frame_hop_s = frame_hop_s;
  trace.input_frames = valid;
  return trace;
}

ForwardTrace Model::forward(const FeatureSequence& f) const {
  if (f.frames() < 1) throw RangeError("model", "empty feature sequence");
  if (f.dims() != cfg_.feature_dim)
    throw ShapeError("model", "feature dimension " + std::to_string(f.dims()) + " does not match model input " +
                                  std::to_string(cfg_.feature_dim));
  return forward(f.values.transpose(), f.frames(), f.frame_hop_s);
}

Eigen::MatrixXd Model::head_gradient(const Eigen::MatrixXd& H, std::size_t w) const {
  const auto out = head(H);
  const auto wi = static_cast<Index>(w);
  const double s = nn::sigmoid(out.logits[wi]);
  Vector dlogits = Vector::Zero(out.logits.size());
  dlogits[wi] = s * (1.0 - s);
  return head_backward(H, dlogits, nullptr);
}

double Model::loss_and_gradient(const Eigen::MatrixXd& x, Eigen::Index valid, const Eigen::VectorXd& target,
                                nn::Gradients& grads) const {
  if (target.size() != cfg_.vocab_size)
    throw ShapeError("train", "target length " + std::to_string(target.size()) + " != vocabulary size " +
                                  std::to_string(cfg_.vocab_size));
  EncoderTape tape;
  const Matrix H = encode_impl(x, valid, &tape);
  const Vector logits = head(H).logits;
  const Index V = logits.size();
  double loss = 0.0;
  Vector dlogits(V);
  for (Index w = 0; w < V; ++w) {
    const double p = nn::sigmoid(logits[w]);
    const double pc = std::clamp(p, 1e-7, 1.0 - 1e-7);
    loss -= target[w] * std::log(pc) + (1.0 - target[w]) * std::log(1.0 - pc);
    dlogits[w] = (p - target[w]) / static_cast<double>(V);
  }
  const Matrix dH = head_backward(H, dlogits, &grads);
  encode_backward(tape, dH, grads);
  return loss / static_cast<double>(V);
}

Eigen::VectorXd pool_log_mean_exp(const Eigen::MatrixXd& H, double r) {
  if (!(r > 0.0)) throw RangeError("model", "log-mean-exp temperature must be > 0");
  if (H.cols() < 1) throw RangeError("model", "log-mean-exp over an empty sequence");
  return nn::log_mean_exp_rows(H, r);
}

Eigen::VectorXd attention_weights(const Eigen::MatrixXd& H, const Eigen::VectorXd& query) {
  if (query.size() != H.rows())
    throw ShapeError("model", "query dimension " + std::to_string(query.size()) + " != embedding dimension " +
                                  std::to_string(H.rows()));
  const Matrix scores = query.transpose() * H;
  return nn::softmax_rows(scores).row(0).transpose();
}

std::string parameter_hash(const nn::ParameterStore& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p[i].data());
    h = fnv1a64(std::span(bytes, static_cast<std::size_t>(p[i].size()) * sizeof(double)), h);
  }
  return to_hex(h);
}

}  // namespace vgskws
