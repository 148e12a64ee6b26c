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


#include <cmath>

#include "doctest.h"
#include "test_support.hpp"
#include "vgskws/error.hpp"
#include "vgskws/toygen.hpp"
#include "vgskws/train.hpp"

using namespace vgskws;
using vgskws::testing::TempDir;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ModelConfig tiny_model(int vocab = 4, int dim = 39) {
  ModelConfig c;
  c.architecture = Architecture::kCnnAttend;
  c.vocab_size = vocab;
  c.feature_dim = dim;
  c.clf_hidden = 16;
  c.encoder_channels = {8, 8, 8, 8, 8, 12};
  return c;
}

ToyConfig tiny_toy() {
  ToyConfig t;
  t.vocab_size = 4;
  t.num_fillers = 4;
  t.n_train = 24;
  t.n_dev = 8;
  t.n_test = 4;
  return t;
}

FeatureSequence random_features(Eigen::Index frames, Rng& rng) {
  FeatureSequence f;
  f.values.resize(frames, 39);
  for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values.data()[i] = standard_normal(rng);
  return f;
}

}  // namespace

TEST_CASE("binary cross-entropy closed forms") {
  CHECK(bce_loss(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(1.0, 0.0)) < 1e-6);
  CHECK(bce_loss(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(1.0, 0.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce_loss(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(1.0, 0.0)) == doctest::Approx(0.6931).epsilon(1e-4));
  const double soft = -(0.9 * std::log(0.9) + 0.1 * std::log(0.1));
  CHECK(bce_loss(VectorXd::Constant(1, 0.9), VectorXd::Constant(1, 0.9)) == doctest::Approx(soft).epsilon(1e-12));
  CHECK(soft == doctest::Approx(0.3251).epsilon(1e-4));
  CHECK(std::isfinite(bce_loss(Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(1.0, 0.0))));
  CHECK_THROWS_AS(bce_loss(Eigen::Vector2d(0.5, 0.5), VectorXd::Zero(3)), ShapeError);
}

TEST_CASE("model loss agrees with bce of its forward pass") {
  const Model m(tiny_model());
  Rng rng(2);
  const FeatureSequence f = random_features(30, rng);
  const VectorXd y = Eigen::Vector4d(1.0, 0.0, 0.3, 0.0);
  auto g = m.params().zeros_like();
  const double loss = m.loss_and_gradient(f.values.transpose(), 30, y, g);
  CHECK(loss == doctest::Approx(bce_loss(m.forward(f).y_hat, y)).epsilon(1e-10));
}

TEST_CASE("padded batch gradient equals the mean of per-utterance gradients") {
  const Model m(tiny_model());
  Rng rng(4);
  const FeatureSequence a = random_features(17, rng), b = random_features(31, rng);
  const VectorXd ya = Eigen::Vector4d(1, 0, 0, 1), yb = Eigen::Vector4d(0, 1, 0, 0);
  const std::vector<const FeatureSequence*> feats{&a, &b};
  const std::vector<const VectorXd*> targets{&ya, &yb};
  nn::Gradients batch;
  const double loss = batch_gradient(m, feats, targets, batch, 1);

  auto ga = m.params().zeros_like(), gb = m.params().zeros_like();
  const double la = m.loss_and_gradient(a.values.transpose(), 17, ya, ga);
  const double lb = m.loss_and_gradient(b.values.transpose(), 31, yb, gb);
  CHECK(loss == doctest::Approx((la + lb) / 2.0).epsilon(1e-12));
  for (std::size_t p = 0; p < batch.size(); ++p) CHECK((batch[p] - (ga[p] + gb[p]) / 2.0).cwiseAbs().maxCoeff() < 1e-12);

  nn::Gradients threaded;
  batch_gradient(m, feats, targets, threaded, 2);
  for (std::size_t p = 0; p < batch.size(); ++p) CHECK((batch[p] - threaded[p]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Adam steps reduce the loss on a fixed batch") {
  Model m(tiny_model());
  Rng rng(5);
  std::vector<FeatureSequence> fs;
  std::vector<VectorXd> ys;
  for (int i = 0; i < 4; ++i) {
    fs.push_back(random_features(uniform_int(rng, 20, 40), rng));
    ys.push_back(Eigen::Vector4d(i % 2, (i / 2) % 2, 1, 0));
  }
  std::vector<const FeatureSequence*> feats;
  std::vector<const VectorXd*> targets;
  for (int i = 0; i < 4; ++i) feats.push_back(&fs[static_cast<std::size_t>(i)]), targets.push_back(&ys[static_cast<std::size_t>(i)]);
  AdamOptimizer adam(m.params(), 1e-3);
  double first = 0.0, previous = INFINITY;
  for (int step = 0; step < 5; ++step) {
    nn::Gradients g;
    const double loss = batch_gradient(m, feats, targets, g, 1);
    if (step == 0) first = loss;
    CHECK(loss < previous);
    previous = loss;
    adam.step(m.params(), g);
  }
  CHECK(adam.steps() == 5);
  CHECK(previous < first);
}

TEST_CASE("first Adam step moves each parameter by the learning rate") {
  Model m(tiny_model());
  const MatrixXd before = m.params()[0];
  auto g = m.params().zeros_like();
  g[0].setConstant(0.25);
  AdamOptimizer adam(m.params(), 0.01);
  adam.step(m.params(), g);
  CHECK(((before - m.params()[0]).array() - 0.01).abs().maxCoeff() < 1e-9);
}

TEST_CASE("training on a toy corpus is reproducible") {
  TempDir dir;
  const CorpusManifest corpus = generate_toy_corpus(tiny_toy(), dir.path());
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  const TrainResult a = train(Model(tiny_model()), corpus, cfg);
  const TrainResult b = train(Model(tiny_model()), corpus, cfg);
  REQUIRE(a.log.size() == 3);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(a.log[i].dev_f1 == b.log[i].dev_f1);
  }
  CHECK(a.best_epoch == b.best_epoch);
  CHECK(parameter_hash(a.model.params()) == parameter_hash(b.model.params()));
  CHECK(a.log.back().train_loss < a.log.front().train_loss);
  CHECK(a.best_dev_f1 >= 0.0);
}

TEST_CASE("noiseless visual tags train exactly like bag-of-words labels") {
  TempDir dir;
  const CorpusManifest corpus = generate_toy_corpus(tiny_toy(), dir.path());
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  const TrainResult bow = train(Model(tiny_model()), corpus, cfg);
  cfg.kind = TargetKind::kVisual;
  const TrainResult visual = train(Model(tiny_model()), corpus, cfg);
  for (std::size_t i = 0; i < bow.log.size(); ++i) CHECK(bow.log[i].train_loss == visual.log[i].train_loss);
}

TEST_CASE("best epoch is the earliest with the highest dev score") {
  TempDir dir;
  const CorpusManifest corpus = generate_toy_corpus(tiny_toy(), dir.path());
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 4;
  cfg.batch_size = 8;
  const TrainResult r = train(Model(tiny_model()), corpus, cfg);
  double best = -1.0;
  int epoch = 0;
  for (const auto& e : r.log) {
    if (e.dev_f1 > best) best = e.dev_f1, epoch = e.epoch;
  }
  CHECK(r.best_epoch == epoch);
  CHECK(r.best_dev_f1 == best);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.spec_augment.time_warp = true;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.epochs = 7;
  cfg.kind = TargetKind::kVisual;
  const nlohmann::json j = cfg;
  CHECK(nlohmann::json(j.get<TrainConfig>()) == j);
}

TEST_CASE("checkpoint round trip restores parameters exactly") {
  TempDir dir;
  const Model m(tiny_model());
  CheckpointMeta meta;
  meta.model = m.config();
  meta.vocabulary_hash = "abc";
  meta.seed = 3;
  meta.epoch = 12;
  meta.dev_metric = 0.75;
  save_checkpoint(m, meta, dir / "ckpt");
  CHECK(std::filesystem::exists(dir / "ckpt.bin"));
  CHECK(std::filesystem::exists(dir / "ckpt.json"));
  const Checkpoint c = load_checkpoint(dir / "ckpt");
  CHECK(parameter_hash(c.model.params()) == parameter_hash(m.params()));
  for (std::size_t p = 0; p < m.params().size(); ++p) CHECK(c.model.params()[p] == m.params()[p]);
  CHECK(c.meta.epoch == 12);
  CHECK(c.meta.vocabulary_hash == "abc");
  CHECK(c.meta.dev_metric == 0.75);

  vgskws::testing::write_text(dir / "bad.bin", "XXXX");
  vgskws::testing::write_text(dir / "bad.json", vgskws::testing::read_text(dir / "ckpt.json"));
  CHECK_THROWS_AS(load_checkpoint(dir / "bad"), Error);
}

TEST_CASE("warm start copies parameters into a same-shape model") {
  TempDir dir;
  ModelConfig src_cfg = tiny_model();
  src_cfg.seed = 11;
  const Model src(src_cfg);
  save_checkpoint(src, {src_cfg, "vocab-a", 11, 1, 0.0}, dir / "src");
  const Checkpoint c = load_checkpoint(dir / "src");

  const Model fresh(tiny_model());
  const Model all = warm_start(fresh, c, WarmStartMode::kAll, "vocab-a");
  CHECK(parameter_hash(all.params()) == parameter_hash(src.params()));

  const Model enc = warm_start(fresh, c, WarmStartMode::kEncoderOnly, "vocab-b");
  for (std::size_t p = 0; p < enc.params().size(); ++p) {
    const bool encoder = enc.params().name(p).rfind("enc.", 0) == 0;
    CHECK(enc.params()[p] == (encoder ? src.params()[p] : fresh.params()[p]));
  }
}

TEST_CASE("warm start rejects incompatible checkpoints") {
  TempDir dir;
  const Model src(tiny_model(4));
  save_checkpoint(src, {src.config(), "vocab-a", 1, 1, 0.0}, dir / "src");
  const Checkpoint c = load_checkpoint(dir / "src");

  CHECK_THROWS_AS(warm_start(Model(tiny_model(5)), c, WarmStartMode::kAll, "vocab-a"), ShapeError);
  CHECK_THROWS_AS(warm_start(Model(tiny_model(4)), c, WarmStartMode::kAll, "vocab-b"), VocabularyError);
  CHECK_NOTHROW(warm_start(Model(tiny_model(5)), c, WarmStartMode::kEncoderOnly, "vocab-b"));
  CHECK_THROWS_AS(warm_start(Model(tiny_model(4, 13)), c, WarmStartMode::kEncoderOnly, "vocab-a"), ShapeError);
  ModelConfig pooled = tiny_model();
  pooled.architecture = Architecture::kCnnPoolAttend;
  pooled.encoder_channels = {8, 8, 12};
  CHECK_THROWS_AS(warm_start(Model(pooled), c, WarmStartMode::kAll, "vocab-a"), ShapeError);
  CHECK(parse_warm_start_mode("encoder_only") == WarmStartMode::kEncoderOnly);
  CHECK_THROWS_AS(parse_warm_start_mode("partial"), ConfigError);
}

TEST_CASE("train log is one JSON object per epoch") {
  TempDir dir;
  write_train_log({{1, 0.5, 0.25, 1.0}, {2, 0.4, 0.5, 2.0}}, dir / "log.jsonl");
  CHECK(vgskws::testing::read_text(dir / "log.jsonl") ==
        "{\"epoch\":1,\"train_loss\":0.5,\"dev_f1\":0.25,\"wall_s\":1.0}\n"
        "{\"epoch\":2,\"train_loss\":0.4,\"dev_f1\":0.5,\"wall_s\":2.0}\n");
}
