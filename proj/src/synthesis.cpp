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

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace jsyn::synthesis {

using idx = std::int64_t;

void SynthesisRequest::validate() const {
  if (speech_steps < 1 || motion_steps < 1) throw Error("synthesize: step counts must be >= 1");
  if (!(tau > 0.0)) throw Error("synthesize: temperature must be positive");
  if (!(duration_scale > 0.0)) throw Error("synthesize: duration scale must be positive");
}

SynthesisResult synthesize(const model::JointModel& m, const SynthesisRequest& req, const text::Lexicon* lexicon) {
  return synthesize_ids(m, text::tokenize(req.text, m.inventory(), lexicon).ids, req);
}

SynthesisResult synthesize_ids(const model::JointModel& m, const std::vector<idx>& ids, const SynthesisRequest& req) {
  req.validate();
  if (m.stats.mel_mean.empty()) throw Error("synthesize: model has no normalization statistics");
  for (idx id : ids) m.inventory().name(id);
  ag::NoGradGuard guard;
  SynthesisResult r;
  r.ids = ids;
  auto enc = m.encoder.encode(ids);
  const Tensor log_d = m.duration.predict(enc).value();
  r.durations = encoder::durations_to_frames(log_d.data, req.duration_scale);
  const Tensor mu = align::upsample_means(enc.mu_tilde.value(), r.durations);
  const auto& sched = m.config().schedule;

  std::mt19937_64 mel_rng(req.seed);
  std::mt19937_64 pose_rng(req.seed ^ 0xa5a5a5a5deadbeefull);
  auto mel_fn = diffusion::inference(m.mel_score());
  auto pose_fn = diffusion::inference(m.pose_score());
  const Tensor mu_p = m.prenet(ag::constant(mu)).value();
  if (req.sampler == Sampler::kOde) {
    r.mel_norm = diffusion::sample_ode(mel_fn, mu, req.speech_steps, req.tau, mel_rng, sched);
    r.pose_norm = diffusion::sample_ode(pose_fn, mu_p, req.motion_steps, req.tau, pose_rng, sched);
  } else {
    r.mel_norm = diffusion::sample_sde(mel_fn, mu, req.speech_steps, mel_rng, req.tau, sched);
    r.pose_norm = diffusion::sample_sde(pose_fn, mu_p, req.motion_steps, pose_rng, req.tau, sched);
  }
  if (!r.mel_norm.all_finite() || !r.pose_norm.all_finite()) throw Error("synthesize: non-finite sample");

  r.mel.frames = features::denormalize(r.mel_norm, m.stats, features::Stream::kMel);
  r.mel.frame_rate_hz = features::kMelFrameRate;
  features::PoseSequence pose{features::denormalize(r.pose_norm, m.stats, features::Stream::kPose),
                              features::kMelFrameRate};
  r.pose = (req.playback_fps > 0.0 && req.playback_fps != pose.frame_rate_hz && pose.length() >= 2)
               ? features::resample_pose(pose, req.playback_fps)
               : std::move(pose);
  return r;
}

void export_pose_csv(const features::PoseSequence& p, const std::filesystem::path& path) {
  const auto& names = features::pose_channel_names();
  if (p.frames.size() > 0 && p.frames.cols() != static_cast<idx>(names.size())) {
    throw Error("export_pose_csv: expected " + std::to_string(names.size()) + " channels");
  }
  std::ofstream os(path);
  if (!os) throw Error("export_pose_csv: cannot write " + path.string());
  os << std::setprecision(17) << "fps," << p.frame_rate_hz << '\n';
  for (std::size_t c = 0; c < names.size(); ++c) os << (c ? "," : "") << names[c];
  os << '\n';
  const idx t = p.frames.size() > 0 ? p.frames.rows() : 0;
  if (t == 0) std::cerr << "warning: writing empty pose sequence to " << path.string() << '\n';
  for (idx r = 0; r < t; ++r) {
    for (idx c = 0; c < p.frames.cols(); ++c) os << (c ? "," : "") << p.frames(r, c);
    os << '\n';
  }
  if (!os) throw Error("export_pose_csv: write failed for " + path.string());
}

features::PoseSequence read_pose_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("read_pose_csv: cannot open " + path.string());
  std::string line;
  features::PoseSequence p;
  if (!std::getline(is, line) || line.rfind("fps,", 0) != 0) throw Error("read_pose_csv: missing fps row in " + path.string());
  try {
    p.frame_rate_hz = std::stod(line.substr(4));
  } catch (const std::exception&) {
    throw Error("read_pose_csv: bad fps value in " + path.string());
  }
  if (!std::getline(is, line)) throw Error("read_pose_csv: missing header in " + path.string());
  const idx c = features::kPoseChannels;
  std::vector<double> vals;
  idx rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    idx n = 0;
    for (std::string cell; std::getline(ss, cell, ',');) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error("read_pose_csv: bad number '" + cell + "' on data row " + std::to_string(rows + 1) + " of " + path.string());
      }
      ++n;
    }
    if (n != c) throw Error("read_pose_csv: row " + std::to_string(rows + 1) + " has " + std::to_string(n) + " values");
    ++rows;
  }
  p.frames = Tensor({rows, c}, std::move(vals));
  return p;
}

void export_mel(const features::MelSpectrogram& m, const std::filesystem::path& path) { features::save_mel(path, m); }

}  // namespace jsyn::synthesis
