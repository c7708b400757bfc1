// Copyright 2026 The JointSynth Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Joint training: synthetic corpus, per-term losses, optimizer and the
// training loop with its three modes.

#ifndef JOINTSYNTH_TRAINING_HPP_
#define JOINTSYNTH_TRAINING_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "jointsynth/model.hpp"

namespace jsyn::training {

enum class Mode { kJoint, kTtsOnly, kMotionOnFrozenTts };
Mode parse_mode(const std::string& s);
std::string mode_name(Mode m);

struct LossWeights {
  double prior = 1.0;
  double duration = 1.0;
  double mel = 1.0;
  double pose = 1.0;
};

struct TrainConfig {
  std::int64_t batch_size = 2;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;  // global norm; <= 0 disables
  std::int64_t max_updates = 3000;
  LossWeights weights;
  std::uint64_t seed = 0;
  Mode mode = Mode::kJoint;
  double val_fraction = 0.1;
  std::uint64_t val_seed = 777;
  std::int64_t val_every = 0;         // 0 disables periodic validation
  std::int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::int64_t log_every = 0;
  std::filesystem::path out_dir;          // where checkpoints and snapshots go
  std::filesystem::path init_checkpoint;  // optional starting weights
  std::int64_t corpus_utterances = 2;
  std::uint64_t corpus_seed = 0;
  model::ModelConfig model;

  void validate() const;
};

// INI-style file: [train], [corpus], [model], [encoder], [acoustic], [prenet],
// [gesture] and [diffusion] sections of key = value pairs. Unknown keys are
// errors.
TrainConfig load_config(const std::filesystem::path& path);

struct SyntheticUtterance {
  std::string text;
  std::vector<std::int64_t> ids;
  features::MelSpectrogram mel;
  features::PoseSequence pose;
  std::vector<std::int64_t> durations;  // generator ground truth per symbol
};

// Templates per symbol: duration in [3, 8] frames, a constant log-mel band
// pattern, and a pose made of a per-symbol offset plus a small sinusoid.
struct SymbolTemplate {
  std::int64_t duration = 0;
  std::vector<double> mel;          // 80
  std::vector<double> pose_offset;  // 45
  std::vector<double> pose_phase;   // 45
  double pose_cycles = 1.0;
};
inline constexpr double kPoseWiggle = 0.1;
SymbolTemplate symbol_template(std::int64_t id);

// Words over a small alphabet, no letter repeated back to back. Deterministic
// in (n_utts, seed); templates do not depend on the seed.
std::vector<SyntheticUtterance> make_synthetic_corpus(std::int64_t n_utts, std::uint64_t seed,
                                                      const text::SymbolInventory& inv = text::SymbolInventory::standard());

// Normalized training item.
struct Item {
  std::vector<std::int64_t> ids;
  Tensor mel;   // [T x 80]
  Tensor pose;  // [T x 45]
};
std::vector<Item> prepare(const std::vector<SyntheticUtterance>& corpus, const features::FeatureStats& stats);
features::FeatureStats corpus_stats(const std::vector<SyntheticUtterance>& corpus);

struct Losses {
  double prior = 0, duration = 0, mel = 0, pose = 0, total = 0;
};

// Adam restricted to a fixed parameter list; parameters that received no
// gradient in a step are left untouched.
class Adam {
 public:
  Adam(std::vector<ag::Var> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  // Clips the global gradient norm (if clip > 0), updates and releases grads.
  // Returns the pre-clip norm.
  double step(double clip);
  const std::vector<ag::Var>& params() const { return params_; }

 private:
  std::vector<ag::Var> params_;
  std::vector<Tensor> m_, v_;
  std::vector<std::int64_t> count_;
  double lr_, b1_, b2_, eps_;
};

// Builds the loss graph for one item and returns per-term values; when
// `backprop_scale` > 0 the weighted total times that factor is backpropagated.
Losses item_losses(const model::JointModel& m, const Item& item, const LossWeights& w, Mode mode,
                   std::mt19937_64& rng, double backprop_scale);

// One optimizer update over a batch; losses are batch means.
Losses joint_step(model::JointModel& m, const std::vector<const Item*>& batch, Adam& opt, const TrainConfig& cfg,
                  std::mt19937_64& rng);

// Mean losses over items with a fixed noise seed and no gradient.
Losses evaluate(const model::JointModel& m, const std::vector<Item>& items, const LossWeights& w, Mode mode,
                std::uint64_t seed);

struct TrainResult {
  std::vector<Losses> history;
  std::vector<std::pair<std::int64_t, Losses>> validation;
  std::filesystem::path checkpoint;  // final checkpoint (empty when out_dir is unset)
  std::uint64_t tts_hash_before = 0, tts_hash_after = 0;
};

struct TrainHooks {
  std::function<void(std::int64_t update, const Losses&)> on_step;
};

// Trains `m` in place. Fits normalization statistics on the training split
// when the model has none.
TrainResult train(const TrainConfig& cfg, const std::vector<SyntheticUtterance>& corpus, model::JointModel& m,
                  const TrainHooks* hooks = nullptr);

// Training and validation index split. Falls back to validating on the
// training set when the fraction rounds to zero utterances.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_corpus(std::size_t n, double val_fraction);

}  // namespace jsyn::training

#endif  // JOINTSYNTH_TRAINING_HPP_
