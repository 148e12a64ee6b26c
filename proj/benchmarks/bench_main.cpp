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

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "vgskws/eval.hpp"
#include "vgskws/features.hpp"
#include "vgskws/localise.hpp"
#include "vgskws/model.hpp"
#include "vgskws/rng.hpp"

namespace {

using namespace vgskws;

ModelConfig attend_config() {
  ModelConfig c;
  c.architecture = Architecture::kCnnAttend;
  c.vocab_size = 67;
  c.feature_dim = 39;
  c.encoder_channels = {32, 32, 32, 32, 32, 48};
  c.clf_hidden = 64;
  return c;
}

FeatureSequence noise_features(Eigen::Index frames, std::uint64_t seed) {
  Rng rng(seed);
  FeatureSequence f;
  f.values.resize(frames, 39);
  for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values.data()[i] = standard_normal(rng);
  return f;
}

void BM_Mfcc(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> samples(static_cast<std::size_t>(state.range(0)) * 16000);
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples[i] = 0.3 * std::sin(0.05 * static_cast<double>(i)) + 0.01 * standard_normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(compute_mfcc(samples, 16000));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_Mfcc)->Arg(1)->Arg(8);

void BM_Forward(benchmark::State& state) {
  const Model m(attend_config());
  const FeatureSequence f = noise_features(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(f));
}
BENCHMARK(BM_Forward)->Arg(200)->Arg(800);

void BM_LossAndGradient(benchmark::State& state) {
  const Model m(attend_config());
  const FeatureSequence f = noise_features(state.range(0), 3);
  const Eigen::MatrixXd x = f.values.transpose();
  const Eigen::VectorXd target = Eigen::VectorXd::Zero(67);
  for (auto _ : state) {
    nn::Gradients g = m.params().zeros_like();
    benchmark::DoNotOptimize(m.loss_and_gradient(x, f.frames(), target, g));
  }
}
BENCHMARK(BM_LossAndGradient)->Arg(200)->Arg(800);

void BM_GradCam(benchmark::State& state) {
  const Model m(attend_config());
  const FeatureSequence f = noise_features(400, 4);
  for (auto _ : state) benchmark::DoNotOptimize(locate_gradcam(m, f, 5));
}
BENCHMARK(BM_GradCam);

void BM_MaskedIn(benchmark::State& state) {
  const Model m(attend_config());
  const FeatureSequence f = noise_features(400, 5);
  for (auto _ : state) benchmark::DoNotOptimize(locate_masked(m, f, 5, MaskMode::kIn));
}
BENCHMARK(BM_MaskedIn);

void BM_BuildReport(benchmark::State& state) {
  const auto n = state.range(0);
  const Eigen::Index V = 67;
  Rng rng(6);
  EvalInput in;
  for (Eigen::Index w = 0; w < V; ++w) in.keywords.push_back("k" + std::to_string(w));
  in.scores.resize(n, V);
  in.presence.resize(n, V);
  Eigen::MatrixXd tau(n, V);
  in.intervals.assign(static_cast<std::size_t>(n), std::vector<Intervals>(static_cast<std::size_t>(V)));
  for (Eigen::Index i = 0; i < n; ++i) {
    in.utt_ids.push_back("u" + std::to_string(i));
    in.durations_s.push_back(4.0);
    for (Eigen::Index w = 0; w < V; ++w) {
      in.scores(i, w) = uniform01(rng);
      in.presence(i, w) = uniform01(rng) < 0.05;
      tau(i, w) = 4.0 * uniform01(rng);
      if (in.presence(i, w)) in.intervals[static_cast<std::size_t>(i)][static_cast<std::size_t>(w)] = {{1.0, 1.5}};
    }
  }
  in.tau["attention"] = tau;
  for (auto _ : state) benchmark::DoNotOptimize(build_report(in, EvalConfig{}));
}
BENCHMARK(BM_BuildReport)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
