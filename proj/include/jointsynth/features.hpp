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

// Acoustic and motion feature streams at a shared frame rate.
//
// Mel features follow the common neural-vocoder convention: 22050 Hz audio,
// 1024-point FFT with a periodic Hann window, hop 256, 80 Slaney mel bands
// between 0 and 8 kHz, natural-log magnitude with a 1e-5 floor, and
// center (reflect) padding so that T = floor(len / 256) + 1.

#ifndef JOINTSYNTH_FEATURES_HPP_
#define JOINTSYNTH_FEATURES_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jointsynth/tensor.hpp"

namespace jsyn::features {

inline constexpr int kSampleRate = 22050;
inline constexpr int kFftSize = 1024;
inline constexpr int kHop = 256;
inline constexpr int kMelBins = 80;
inline constexpr double kFmin = 0.0;
inline constexpr double kFmax = 8000.0;
inline constexpr double kLogFloor = 1e-5;
// 22050 / 256, exactly representable.
inline constexpr double kMelFrameRate = static_cast<double>(kSampleRate) / kHop;

inline constexpr int kPoseChannels = 45;
// Channels 0-2 are root translation; every later triple is an exponential-map
// rotation (root orientation first, then 13 upper-body joints).
inline constexpr int kPoseTranslationChannels = 3;

struct MelSpectrogram {
  Tensor frames;  // [T x 80]
  double frame_rate_hz = kMelFrameRate;

  std::int64_t length() const { return frames.shape.empty() ? 0 : frames.rows(); }
  // Throws Error when the channel count, finiteness or rate invariant fails.
  void validate() const;
};

struct PoseSequence {
  Tensor frames;  // [T x 45]
  double frame_rate_hz = 0.0;

  std::int64_t length() const { return frames.shape.empty() ? 0 : frames.rows(); }
  void validate() const;
};

const std::vector<std::string>& pose_channel_names();

// Wraps every rotation triple to angle magnitude <= pi (same rotation).
void canonicalize_rotations(PoseSequence& p);

// Slaney-normalized triangular filters [80 x (kFftSize/2 + 1)].
Tensor mel_filterbank();

MelSpectrogram extract_mel(std::span<const double> waveform, int sample_rate);

// Linear per-channel interpolation onto a uniform grid at target_rate, with
// T' = round(T * target_rate / source_rate). Times past the last source frame
// hold the last frame.
PoseSequence resample_pose(const PoseSequence& p, double target_rate);

// Truncates both streams to the shorter length. Rates must match.
std::pair<MelSpectrogram, PoseSequence> align_lengths(const MelSpectrogram& mel, const PoseSequence& pose);

struct FeatureStats {
  std::vector<double> mel_mean, mel_std;    // 80 each
  std::vector<double> pose_mean, pose_std;  // 45 each
};

FeatureStats fit_stats(std::span<const std::pair<MelSpectrogram, PoseSequence>> corpus);

enum class Stream { kMel, kPose };
Tensor normalize(const Tensor& x, const FeatureStats& stats, Stream stream);
Tensor denormalize(const Tensor& x, const FeatureStats& stats, Stream stream);

// FTZ1 persistence of single streams (f32 on disk).
void save_mel(const std::filesystem::path& path, const MelSpectrogram& m);
MelSpectrogram load_mel(const std::filesystem::path& path);
void save_pose(const std::filesystem::path& path, const PoseSequence& p);
PoseSequence load_pose(const std::filesystem::path& path);

// Minimal RIFF/WAVE support: 16-bit PCM or 32-bit float, channels averaged.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;
};
Waveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& w);

}  // namespace jsyn::features

#endif  // JOINTSYNTH_FEATURES_HPP_
