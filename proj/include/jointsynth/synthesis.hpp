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


// Text to (mel, pose) inference and output writers.

#ifndef JOINTSYNTH_SYNTHESIS_HPP_
#define JOINTSYNTH_SYNTHESIS_HPP_

#include <filesystem>
#include <string>

#include "jointsynth/model.hpp"

namespace jsyn::synthesis {

enum class Sampler { kOde, kSde };

struct SynthesisRequest {
  std::string text;
  int speech_steps = 50;
  int motion_steps = 500;
  double tau = 1.5;
  double duration_scale = 1.0;
  std::uint64_t seed = 0;
  double playback_fps = 0.0;  // <= 0 keeps the model frame rate
  Sampler sampler = Sampler::kOde;

  void validate() const;
};

struct SynthesisResult {
  std::vector<std::int64_t> ids;
  align::DurationAlignment durations;
  Tensor mel_norm;   // [T x 80], normalized units
  Tensor pose_norm;  // [T x 45], normalized units at the mel frame rate
  features::MelSpectrogram mel;
  features::PoseSequence pose;  // denormalized, at playback_fps when requested
};

SynthesisResult synthesize(const model::JointModel& m, const SynthesisRequest& req,
                           const text::Lexicon* lexicon = nullptr);
SynthesisResult synthesize_ids(const model::JointModel& m, const std::vector<std::int64_t>& ids,
                               const SynthesisRequest& req);

// Line 1 "fps,<rate>", line 2 the 45 channel names, then one row per frame.
void export_pose_csv(const features::PoseSequence& p, const std::filesystem::path& path);
features::PoseSequence read_pose_csv(const std::filesystem::path& path);
void export_mel(const features::MelSpectrogram& m, const std::filesystem::path& path);

}  // namespace jsyn::synthesis

#endif  // JOINTSYNTH_SYNTHESIS_HPP_
