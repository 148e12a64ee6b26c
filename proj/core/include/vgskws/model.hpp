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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "vgskws/features.hpp"
#include "vgskws/layers.hpp"

namespace vgskws {

enum class Architecture { kPsc, kCnnPool, kCnnAttend, kCnnPoolAttend };
std::string to_string(Architecture a);
Architecture parse_architecture(const std::string& text);

/// Whether the encoder uses the two intermediate max-pools.
bool uses_pooled_encoder(Architecture a);
bool uses_attention(Architecture a);

struct ModelConfig {
  Architecture architecture = Architecture::kCnnAttend;
  int vocab_size = 67;
  int feature_dim = 39;
  double lme_r = 1.0;        // PSC temperature
  int clf_hidden = 4096;     // 4096 or 8192 at full scale
  int embed_dim = 0;         // 0: derived from the encoder's last layer
  /// Encoder widths; empty selects the full-size defaults
  /// (CNN 96x5 + 1000, CNN-Pool 64/256/1024, PSC last layer = V).
  std::vector<int> encoder_channels;
  std::uint64_t seed = 1;

  /// Widths after defaults are applied.
  std::vector<int> resolved_channels() const;
  int resolved_embed_dim() const;
  /// Throws ConfigError on inconsistencies.
  void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& cfg);
void from_json(const nlohmann::json& j, ModelConfig& cfg);

/// Outputs of one forward pass.
struct ForwardTrace {
  Eigen::VectorXd y_hat;   // V detection probabilities
  Eigen::VectorXd logits;  // pre-sigmoid scores
  Eigen::MatrixXd H;       // E x T' encoder output (valid steps only)
  std::optional<Eigen::MatrixXd> attention;  // V x T'
  Architecture architecture = Architecture::kCnnAttend;
  int downsample_factor = 1;
  double frame_hop_s = 0.010;
  Eigen::Index input_frames = 0;

  /// Centre of the downsample block of encoder step t, in seconds.
  double time_of(Eigen::Index t) const {
    return (static_cast<double>(t) * downsample_factor + downsample_factor / 2.0) * frame_hop_s;
  }
};

/// DNN_a = Clf . Pool . Enc for the four architectures.
class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  int downsample_factor() const;
  Eigen::Index output_length(Eigen::Index frames) const;
  int embed_dim() const { return embed_dim_; }

  ForwardTrace forward(const FeatureSequence& f) const;
  /// `x` is F x T (feature-major); frames at or beyond `valid` are padding
  /// and contribute nothing.
  ForwardTrace forward(const Eigen::MatrixXd& x, Eigen::Index valid, double frame_hop_s) const;

  /// Encoder output for the first `valid` frames (E x T').
  Eigen::MatrixXd encode(const Eigen::MatrixXd& x, Eigen::Index valid) const;

  struct HeadOutput {
    Eigen::VectorXd logits;
    std::optional<Eigen::MatrixXd> attention;
  };
  /// Pool and classify an encoder output.
  HeadOutput head(const Eigen::MatrixXd& H) const;

  /// d y_hat[w] / d H, E x T'.
  Eigen::MatrixXd head_gradient(const Eigen::MatrixXd& H, std::size_t w) const;

  /// Mean binary cross-entropy against `target`; accumulates parameter
  /// gradients into `grads` (shaped like params()).
  double loss_and_gradient(const Eigen::MatrixXd& x, Eigen::Index valid,
                           const Eigen::VectorXd& target, nn::Gradients& grads) const;

  /// Re-draws every parameter whose name does not start with "enc.".
  void reinitialise_head();

 private:
  struct EncoderLayer {
    nn::Conv1d conv;
    bool relu = true;
    bool pool = false;
  };
  struct EncoderTape;

  Eigen::MatrixXd encode_impl(const Eigen::MatrixXd& x, Eigen::Index valid, EncoderTape* tape) const;
  void encode_backward(const EncoderTape& tape, const Eigen::MatrixXd& dH, nn::Gradients& g) const;
  /// Head forward + backward from d loss / d logits.  Returns d loss / d H.
  Eigen::MatrixXd head_backward(const Eigen::MatrixXd& H, const Eigen::VectorXd& dlogits,
                                nn::Gradients* g) const;
  void initialise(bool head_only);

  ModelConfig cfg_;
  nn::ParameterStore params_;
  std::vector<EncoderLayer> encoder_;
  int embed_dim_ = 0;
  // Head pieces; which are used depends on the architecture.
  nn::Linear clf_hidden_;
  nn::Linear clf_out_;
  std::size_t query_ = 0;
};

/// (1/r) log mean exp(r h) per row; see nn::log_mean_exp_rows.
Eigen::VectorXd pool_log_mean_exp(const Eigen::MatrixXd& H, double r);

/// softmax_t(q^T h_t).
Eigen::VectorXd attention_weights(const Eigen::MatrixXd& H, const Eigen::VectorXd& query);

/// Fingerprint of all parameter values.
std::string parameter_hash(const nn::ParameterStore& p);

}  // namespace vgskws
