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


// Command-line front end: features, align, train, synth and eval.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "jointsynth/aligner.hpp"
#include "jointsynth/eval.hpp"
#include "jointsynth/features.hpp"
#include "jointsynth/ftz.hpp"
#include "jointsynth/synthesis.hpp"
#include "jointsynth/training.hpp"

namespace fs = std::filesystem;
using namespace jsyn;

int main(int argc, char** argv) {
  CLI::App app{"Joint speech and gesture synthesis"};
  app.require_subcommand(1);

  // features
  auto* feat = app.add_subcommand("features", "Feature extraction and resampling");
  feat->require_subcommand(1);
  std::string wav_path, out_path, in_path;
  double rate = features::kMelFrameRate;
  auto* extract = feat->add_subcommand("extract", "Log-mel spectrogram of a 22.05 kHz WAV file");
  extract->add_option("--wav", wav_path, "Input WAV")->required();
  extract->add_option("--out", out_path, "Output FTZ1 file")->required();
  auto* resample = feat->add_subcommand("resample", "Resample a pose FTZ1 file to a new frame rate");
  resample->add_option("--in", in_path, "Input pose FTZ1 file")->required();
  resample->add_option("--rate", rate, "Target rate in Hz")->required();
  resample->add_option("--out", out_path, "Output FTZ1 file")->required();

  // align
  auto* align_cmd = app.add_subcommand("align", "Monotonic alignment of per-symbol means to frames");
  std::string mu_path, y_path;
  align_cmd->add_option("--mu", mu_path, "Per-symbol means [P x C] (FTZ1)")->required();
  align_cmd->add_option("--y", y_path, "Frames [T x C] (FTZ1)")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train on the synthetic corpus");
  std::string config_path, mode = "joint", train_out;
  train_cmd->add_option("--config", config_path, "INI config file")->required();
  train_cmd->add_option("--mode", mode, "joint | tts_only | motion_on_frozen_tts")
      ->check(CLI::IsMember({"joint", "tts_only", "motion_on_frozen_tts"}));
  train_cmd->add_option("--out-dir", train_out, "Overrides [train] out_dir");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Synthesize mel and pose from text");
  synthesis::SynthesisRequest req;
  req.playback_fps = 60.0;
  std::string ckpt, out_dir = ".", stem = "synth", lexicon_path;
  bool use_sde = false;
  synth_cmd->add_option("--text", req.text, "Input text")->required();
  synth_cmd->add_option("--ckpt", ckpt, "Checkpoint archive")->required();
  synth_cmd->add_option("--speech-steps", req.speech_steps, "Acoustic sampler steps")->capture_default_str();
  synth_cmd->add_option("--motion-steps", req.motion_steps, "Gesture sampler steps")->capture_default_str();
  synth_cmd->add_option("--tau", req.tau, "Sampling temperature")->capture_default_str();
  synth_cmd->add_option("--seed", req.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--duration-scale", req.duration_scale, "Tempo factor on predicted durations")
      ->capture_default_str();
  synth_cmd->add_option("--playback-fps", req.playback_fps, "Pose output frame rate")->capture_default_str();
  synth_cmd->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  synth_cmd->add_option("--stem", stem, "Output file stem")->capture_default_str();
  synth_cmd->add_option("--lexicon", lexicon_path, "Pronunciation dictionary (CMUdict format)");
  synth_cmd->add_flag("--sde", use_sde, "Use the stochastic sampler instead of the ODE");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Subjective-test analysis");
  eval_cmd->require_subcommand(1);
  auto* summarize = eval_cmd->add_subcommand("summarize", "Scores, confidence intervals and pairwise tests");
  std::string responses, scale = "mos";
  int max_failed = 1;
  double alpha = 0.05;
  bool holm = false;
  summarize->add_option("--responses", responses, "Response CSV")->required();
  summarize->add_option("--scale", scale, "mos | mismatch")->check(CLI::IsMember({"mos", "mismatch"}));
  summarize->add_option("--max-failed", max_failed, "Attention checks a participant may fail")->capture_default_str();
  summarize->add_option("--alpha", alpha, "Significance level")->capture_default_str();
  summarize->add_flag("--holm", holm, "Holm-Bonferroni correction");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extract) {
      const auto wav = features::read_wav(wav_path);
      features::save_mel(out_path, features::extract_mel(wav.samples, wav.sample_rate));
    } else if (*resample) {
      features::save_pose(out_path, features::resample_pose(features::load_pose(in_path), rate));
    } else if (*align_cmd) {
      const auto mu = ftz::read_file(mu_path).tensor;
      const auto y = ftz::read_file(y_path).tensor;
      const auto res = align::mas_search(align::gaussian_loglik(mu, y));
      for (std::size_t i = 0; i < res.alignment.durations.size(); ++i) {
        std::cout << (i ? " " : "") << res.alignment.durations[i];
      }
      std::cout << '\n';
      std::cerr << "log-likelihood " << res.score << '\n';
    } else if (*train_cmd) {
      auto cfg = training::load_config(config_path);
      if (train_cmd->count("--mode")) cfg.mode = training::parse_mode(mode);
      if (!train_out.empty()) cfg.out_dir = train_out;
      if (cfg.out_dir.empty()) cfg.out_dir = "train_out";
      if (cfg.log_every == 0) cfg.log_every = 100;
      const auto corpus = training::make_synthetic_corpus(cfg.corpus_utterances, cfg.corpus_seed);
      std::unique_ptr<model::JointModel> m;
      if (!cfg.init_checkpoint.empty()) {
        m = model::load_checkpoint(cfg.init_checkpoint);
      } else {
        m = std::make_unique<model::JointModel>(cfg.model, text::SymbolInventory::standard());
      }
      const auto res = training::train(cfg, corpus, *m);
      if (!res.history.empty()) {
        const auto& l = res.history.back();
        std::cout << "final losses: prior=" << l.prior << " duration=" << l.duration << " mel=" << l.mel
                  << " pose=" << l.pose << " total=" << l.total << '\n';
      }
      if (cfg.mode == training::Mode::kMotionOnFrozenTts) {
        std::cout << "tts parameters " << (res.tts_hash_before == res.tts_hash_after ? "unchanged" : "CHANGED") << '\n';
      }
      std::cout << "checkpoint: " << res.checkpoint.string() << '\n';
    } else if (*synth_cmd) {
      const auto m = model::load_checkpoint(ckpt);
      req.sampler = use_sde ? synthesis::Sampler::kSde : synthesis::Sampler::kOde;
      text::Lexicon lex;
      if (!lexicon_path.empty()) lex = text::load_lexicon(lexicon_path);
      const auto r = synthesis::synthesize(*m, req, lexicon_path.empty() ? nullptr : &lex);
      fs::create_directories(out_dir);
      const auto mel_out = fs::path(out_dir) / (stem + ".mel.ftz");
      const auto pose_out = fs::path(out_dir) / (stem + ".pose.csv");
      synthesis::export_mel(r.mel, mel_out);
      synthesis::export_pose_csv(r.pose, pose_out);
      std::cout << mel_out.string() << " (" << r.mel.length() << " frames)\n"
                << pose_out.string() << " (" << r.pose.length() << " frames at " << r.pose.frame_rate_hz << " fps)\n";
    } else if (*summarize) {
      const auto sc = eval::parse_scale(scale);
      const auto rows = eval::filter_participants(eval::read_responses(responses), max_failed);
      const auto summary = sc == eval::Scale::kMos ? eval::mos_summary(rows) : eval::mismatch_scores(rows);
      std::cout << eval::format_report(summary, eval::pairwise_tests(rows, sc, alpha, holm));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
