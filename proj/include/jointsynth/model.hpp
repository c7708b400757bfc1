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


// The joint text-to-speech-and-gesture model and its checkpoint archive.

#ifndef JOINTSYNTH_MODEL_HPP_
#define JOINTSYNTH_MODEL_HPP_

#include <filesystem>
#include <memory>

#include "json.hpp"
#include "jointsynth/decoders.hpp"
#include "jointsynth/diffusion.hpp"
#include "jointsynth/encoder.hpp"
#include "jointsynth/features.hpp"
#include "jointsynth/text_frontend.hpp"

namespace jsyn::model {

struct ModelConfig {
  encoder::EncoderConfig encoder;
  decoders::AcousticConfig acoustic;
  decoders::ConformerConfig prenet;
  decoders::GestureConfig gesture;
  diffusion::NoiseSchedule schedule;
  diffusion::ScoreConfig score;
  std::uint64_t init_seed = 1234;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Parameter-name prefixes of the speech (TTS) and motion parts.
inline const std::vector<std::string> kTtsPrefixes = {"enc.", "dp.", "mel."};
inline const std::vector<std::string> kMotionPrefixes = {"prenet.", "pose."};

class JointModel {
 public:
  JointModel(ModelConfig cfg, text::SymbolInventory inventory);
  JointModel(const JointModel&) = delete;
  JointModel& operator=(const JointModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  const text::SymbolInventory& inventory() const { return inventory_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  std::vector<ag::Var> tts_params() const;
  std::vector<ag::Var> motion_params() const;

  diffusion::ScoreNet mel_score() const;
  diffusion::ScoreNet pose_score() const;

  // Normalization statistics of the training corpus (empty until set).
  features::FeatureStats stats;

 private:
  ModelConfig cfg_;
  text::SymbolInventory inventory_;
  nn::ParamStore params_;
  std::mt19937_64 init_rng_;

 public:
  encoder::TextEncoder encoder;
  encoder::DurationPredictor duration;
  decoders::AcousticUNet mel_unet;
  decoders::ConformerPrenet prenet;
  decoders::GestureUNet pose_unet;
};

// FNV-1a over names, shapes and raw value bytes.
std::uint64_t hash_params(const std::vector<ag::Var>& vars);

// Archive: a magic line, one JSON manifest line (architecture, inventory and
// its hash, normalization stats, parameter list, caller metadata), then one
// f64 FTZ1 record per parameter. Written to a temporary file and renamed.
void save_checkpoint(const std::filesystem::path& path, const JointModel& m, const nlohmann::json& meta = {});
std::unique_ptr<JointModel> load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

}  // namespace jsyn::model

#endif  // JOINTSYNTH_MODEL_HPP_
