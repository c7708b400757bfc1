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


#include "jointsynth/synthesis.hpp"

#include <cmath>
#include <fstream>

#include "fixtures.hpp"
#include "gtest/gtest.h"
#include "jointsynth/training.hpp"

namespace jsyn::synthesis {
namespace {

namespace fs = std::filesystem;

class SynthesisTest : public ::testing::Test {
 protected:
  void SetUp() override {
    model_ = std::make_unique<model::JointModel>(testing::tiny_model_config(), text::SymbolInventory::standard());
    model_->stats = training::corpus_stats(training::make_synthetic_corpus(4, 0));
  }
  SynthesisRequest quick(const std::string& text, std::uint64_t seed) const {
    SynthesisRequest r;
    r.text = text;
    r.seed = seed;
    r.speech_steps = 8;
    r.motion_steps = 16;
    return r;
  }
  std::unique_ptr<model::JointModel> model_;
};

TEST(Request, PaperDefaults) {
  const SynthesisRequest r;
  EXPECT_EQ(r.speech_steps, 50);
  EXPECT_EQ(r.motion_steps, 500);
  EXPECT_EQ(r.tau, 1.5);
  EXPECT_EQ(r.duration_scale, 1.0);
  EXPECT_EQ(r.sampler, Sampler::kOde);
}

TEST(Request, Validation) {
  SynthesisRequest r;
  r.text = "a";
  EXPECT_NO_THROW(r.validate());
  r.speech_steps = 0;
  EXPECT_THROW(r.validate(), Error);
  r = SynthesisRequest{};
  r.text = "a";
  r.tau = 0.0;
  EXPECT_THROW(r.validate(), Error);
  r.tau = 1.0;
  r.duration_scale = -1.0;
  EXPECT_THROW(r.validate(), Error);
}

TEST_F(SynthesisTest, OutputsShareTheFrameCount) {
  const auto r = synthesize(*model_, quick("tila mer", 3));
  const auto t = r.durations.total;
  EXPECT_EQ(r.mel_norm.shape, (Shape{t, 80}));
  EXPECT_EQ(r.pose_norm.shape, (Shape{t, 45}));
  EXPECT_EQ(r.mel.length(), t);
  EXPECT_EQ(r.pose.length(), t);
  EXPECT_EQ(r.pose.frame_rate_hz, features::kMelFrameRate);
  EXPECT_EQ(r.ids.size(), r.durations.durations.size());
  EXPECT_TRUE(r.mel.frames.all_finite());
  EXPECT_TRUE(r.pose.frames.all_finite());
}

TEST_F(SynthesisTest, FrameCountFollowsTheDurationHead) {
  for (double scale : {1.0, 2.0, 0.5}) {
    auto req = quick("sole kin", 1);
    req.duration_scale = scale;
    const auto r = synthesize(*model_, req);
    ag::NoGradGuard guard;
    const Tensor log_d = model_->duration.predict(model_->encoder.encode(r.ids)).value();
    std::int64_t want = 0;
    for (double l : log_d.data) want += std::max<std::int64_t>(1, std::llround(scale * std::exp(l)));
    EXPECT_EQ(r.durations.total, want) << "scale " << scale;
    EXPECT_EQ(r.mel.length(), want);
  }
}

TEST_F(SynthesisTest, BitReproducibleForBothSamplers) {
  for (Sampler s : {Sampler::kOde, Sampler::kSde}) {
    auto req = quick("rot a", 42);
    req.sampler = s;
    const auto a = synthesize(*model_, req), b = synthesize(*model_, req);
    EXPECT_EQ(a.mel.frames.data, b.mel.frames.data);
    EXPECT_EQ(a.pose.frames.data, b.pose.frames.data);
  }
}

TEST_F(SynthesisTest, DistinctSeedsGiveDistinctOutputs) {
  std::vector<SynthesisResult> outs;
  for (std::uint64_t seed = 0; seed < 5; ++seed) outs.push_back(synthesize(*model_, quick("milo", seed)));
  for (std::size_t i = 0; i < outs.size(); ++i)
    for (std::size_t j = i + 1; j < outs.size(); ++j) {
      EXPECT_GT(mean_squared_diff(outs[i].mel_norm, outs[j].mel_norm), 0.0);
      EXPECT_GT(mean_squared_diff(outs[i].pose_norm, outs[j].pose_norm), 0.0);
    }
}

TEST_F(SynthesisTest, PlaybackRateCoversTheSameDuration) {
  auto req = quick("kest ami lo", 5);
  req.playback_fps = 60.0;
  const auto r = synthesize(*model_, req);
  EXPECT_EQ(r.pose.frame_rate_hz, 60.0);
  const double mel_seconds = static_cast<double>(r.mel.length()) / r.mel.frame_rate_hz;
  const double pose_seconds = static_cast<double>(r.pose.length()) / 60.0;
  EXPECT_LE(std::fabs(mel_seconds - pose_seconds), 1.0 / 60.0);
}

TEST_F(SynthesisTest, ErrorsAreReported) {
  EXPECT_THROW(synthesize(*model_, quick("", 1)), Error);
  EXPECT_THROW(synthesize(*model_, quick("a1", 1)), Error);
  model::JointModel blank(testing::tiny_model_config(), text::SymbolInventory::standard());
  EXPECT_THROW(synthesize(blank, quick("a", 1)), Error);  // no normalization stats
}

TEST(PoseCsv, RoundTripIsExact) {
  std::mt19937_64 rng(7);
  features::PoseSequence p{Tensor::randn({9, 45}, rng), 60.0};
  const auto path = fs::temp_directory_path() / "jsyn_pose.csv";
  export_pose_csv(p, path);
  const auto back = read_pose_csv(path);
  EXPECT_EQ(back.frame_rate_hz, 60.0);
  EXPECT_EQ(back.frames.shape, p.frames.shape);
  EXPECT_EQ(back.frames.data, p.frames.data);
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "fps,60");
  std::getline(is, line);
  EXPECT_EQ(line.substr(0, 16), "root_tx,root_ty,");
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 44);
}

TEST(PoseCsv, EmptySequenceWritesHeaderOnly) {
  features::PoseSequence p{Tensor({0, 45}), 30.0};
  const auto path = fs::temp_directory_path() / "jsyn_pose_empty.csv";
  ::testing::internal::CaptureStderr();
  export_pose_csv(p, path);
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("warning"), std::string::npos);
  std::ifstream is(path);
  int lines = 0;
  for (std::string l; std::getline(is, l);) ++lines;
  EXPECT_EQ(lines, 2);
  const auto back = read_pose_csv(path);
  EXPECT_EQ(back.length(), 0);
  EXPECT_EQ(back.frame_rate_hz, 30.0);
}

TEST(PoseCsv, IoErrorsNameThePath) {
  features::PoseSequence p{Tensor({1, 45}), 30.0};
  try {
    export_pose_csv(p, "/nonexistent_dir/x.csv");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent_dir/x.csv"), std::string::npos);
  }
  EXPECT_THROW(read_pose_csv("/nonexistent_dir/x.csv"), Error);
}

TEST(MelExport, WritesFtz) {
  std::mt19937_64 rng(8);
  features::MelSpectrogram m{Tensor::randn({5, 80}, rng), features::kMelFrameRate};
  for (auto& v : m.frames.data) v = static_cast<float>(v);
  const auto path = fs::temp_directory_path() / "jsyn_out.mel.ftz";
  export_mel(m, path);
  EXPECT_EQ(features::load_mel(path).frames.data, m.frames.data);
}

}  // namespace
}  // namespace jsyn::synthesis
