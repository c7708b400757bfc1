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

#include "jointsynth/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>

#include "jointsynth/ftz.hpp"

namespace jsyn::features {

using idx = std::int64_t;

namespace {

constexpr double kPi = std::numbers::pi;

bool same_rate(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

void validate_frames(const Tensor& f, int channels, double rate, const char* what) {
  if (f.dim() != 2 || f.cols() != channels) {
    throw Error(std::string(what) + ": expected [T x " + std::to_string(channels) + "], got " + shape_str(f.shape));
  }
  if (!f.all_finite()) throw Error(std::string(what) + ": non-finite values");
  if (!(rate > 0.0) || !std::isfinite(rate)) throw Error(std::string(what) + ": frame rate must be positive");
}

double hz_to_mel(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz < min_log_hz) return hz / f_sp;
  return min_log_mel + std::log(hz / min_log_hz) / logstep;
}

double mel_to_hz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  const double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel < min_log_mel) return mel * f_sp;
  return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void MelSpectrogram::validate() const {
  validate_frames(frames, kMelBins, frame_rate_hz, "MelSpectrogram");
  if (frames.rows() < 1) throw Error("MelSpectrogram: needs at least one frame");
}

void PoseSequence::validate() const { validate_frames(frames, kPoseChannels, frame_rate_hz, "PoseSequence"); }

const std::vector<std::string>& pose_channel_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n = {"root_tx", "root_ty", "root_tz", "root_rx", "root_ry", "root_rz"};
    const char* joints[] = {"spine",      "spine1", "spine2",      "spine3",     "neck",
                            "neck1",      "head",   "r_shoulder",  "r_arm",      "r_forearm",
                            "l_shoulder", "l_arm",  "l_forearm"};
    for (const char* j : joints) {
      for (const char* ax : {"_rx", "_ry", "_rz"}) n.push_back(std::string(j) + ax);
    }
    return n;
  }();
  return names;
}

void canonicalize_rotations(PoseSequence& p) {
  const idx t = p.length();
  for (idx r = 0; r < t; ++r) {
    for (int c = kPoseTranslationChannels; c + 3 <= kPoseChannels; c += 3) {
      double* v = &p.frames(r, c);
      const double angle = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
      if (angle <= kPi) continue;
      // Same rotation with angle wrapped into (-pi, pi].
      const double wrapped = angle - 2.0 * kPi * std::ceil((angle - kPi) / (2.0 * kPi));
      const double s = wrapped / angle;
      for (int k = 0; k < 3; ++k) v[k] *= s;
    }
  }
}

Tensor mel_filterbank() {
  constexpr int n_freq = kFftSize / 2 + 1;
  Tensor fb({kMelBins, n_freq});
  const double mel_lo = hz_to_mel(kFmin), mel_hi = hz_to_mel(kFmax);
  std::vector<double> mel_f(kMelBins + 2);
  for (int i = 0; i < kMelBins + 2; ++i) mel_f[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (kMelBins + 1));
  for (int m = 0; m < kMelBins; ++m) {
    const double lo = mel_f[m], ctr = mel_f[m + 1], hi = mel_f[m + 2];
    const double enorm = 2.0 / (hi - lo);
    for (int k = 0; k < n_freq; ++k) {
      const double f = static_cast<double>(k) * kSampleRate / kFftSize;
      const double lower = (f - lo) / (ctr - lo);
      const double upper = (hi - f) / (hi - ctr);
      fb(m, k) = std::max(0.0, std::min(lower, upper)) * enorm;
    }
  }
  return fb;
}

MelSpectrogram extract_mel(std::span<const double> waveform, int sample_rate) {
  if (sample_rate != kSampleRate) {
    throw Error("extract_mel: sample rate " + std::to_string(sample_rate) + " Hz is not supported; resample to " +
                std::to_string(kSampleRate) + " Hz first (e.g. `sox in.wav -r 22050 out.wav`)");
  }
  if (waveform.empty()) throw Error("extract_mel: empty waveform");
  const idx len = static_cast<idx>(waveform.size());
  if (len < kFftSize) {
    throw Error("extract_mel: waveform has " + std::to_string(len) + " samples, shorter than one " +
                std::to_string(kFftSize) + "-sample analysis window");
  }

  // Reflect padding by half a window on each side.
  const idx pad = kFftSize / 2;
  std::vector<double> padded(static_cast<std::size_t>(len + 2 * pad));
  for (idx i = 0; i < len + 2 * pad; ++i) {
    idx src = i - pad;
    if (src < 0) src = -src;
    if (src >= len) src = 2 * (len - 1) - src;
    padded[i] = waveform[src];
  }

  const idx frames = len / kHop + 1;
  constexpr int n_freq = kFftSize / 2 + 1;
  std::vector<double> window(kFftSize);
  for (int n = 0; n < kFftSize; ++n) window[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / kFftSize);

  double* in = fftw_alloc_real(kFftSize);
  fftw_complex* out = fftw_alloc_complex(n_freq);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    plan = fftw_plan_dft_r2c_1d(kFftSize, in, out, FFTW_ESTIMATE);
  }

  static const Tensor fb = mel_filterbank();
  MelSpectrogram mel;
  mel.frames = Tensor({frames, kMelBins});
  mel.frame_rate_hz = kMelFrameRate;
  std::vector<double> mag(n_freq);
  for (idx f = 0; f < frames; ++f) {
    const double* src = padded.data() + f * kHop;
    for (int n = 0; n < kFftSize; ++n) in[n] = src[n] * window[n];
    fftw_execute(plan);
    for (int k = 0; k < n_freq; ++k) mag[k] = std::sqrt(out[k][0] * out[k][0] + out[k][1] * out[k][1]);
    for (int m = 0; m < kMelBins; ++m) {
      double e = 0.0;
      for (int k = 0; k < n_freq; ++k) e += fb(m, k) * mag[k];
      mel.frames(f, m) = std::log(std::max(e, kLogFloor));
    }
  }
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return mel;
}

PoseSequence resample_pose(const PoseSequence& p, double target_rate) {
  p.validate();
  if (!(target_rate > 0.0) || !std::isfinite(target_rate)) throw Error("resample_pose: target rate must be positive");
  if (same_rate(p.frame_rate_hz, target_rate)) {
    PoseSequence out = p;
    out.frame_rate_hz = target_rate;
    return out;
  }
  const idx t = p.length();
  if (t < 2) throw Error("resample_pose: need at least 2 frames to interpolate between rates");
  const idx t_out = static_cast<idx>(std::llround(static_cast<double>(t) * target_rate / p.frame_rate_hz));
  PoseSequence out;
  out.frame_rate_hz = target_rate;
  out.frames = Tensor({t_out, kPoseChannels});
  const double step = p.frame_rate_hz / target_rate;
  for (idx i = 0; i < t_out; ++i) {
    const double u = static_cast<double>(i) * step;
    idx j = static_cast<idx>(std::floor(u));
    if (j >= t - 1) {
      std::copy_n(p.frames.data.begin() + (t - 1) * kPoseChannels, kPoseChannels, out.frames.data.begin() + i * kPoseChannels);
      continue;
    }
    const double frac = u - static_cast<double>(j);
    for (int c = 0; c < kPoseChannels; ++c) {
      const double a = p.frames(j, c), b = p.frames(j + 1, c);
      out.frames(i, c) = a + frac * (b - a);
    }
  }
  return out;
}

std::pair<MelSpectrogram, PoseSequence> align_lengths(const MelSpectrogram& mel, const PoseSequence& pose) {
  if (!same_rate(mel.frame_rate_hz, pose.frame_rate_hz)) {
    throw Error("align_lengths: frame rates differ (" + std::to_string(mel.frame_rate_hz) + " vs " +
                std::to_string(pose.frame_rate_hz) + " Hz); resample the pose stream first");
  }
  const idx t = std::min(mel.length(), pose.length());
  if (t == 0) throw Error("align_lengths: one of the streams is empty");
  MelSpectrogram m;
  m.frame_rate_hz = mel.frame_rate_hz;
  m.frames = Tensor({t, kMelBins}, std::vector<double>(mel.frames.data.begin(), mel.frames.data.begin() + t * kMelBins));
  PoseSequence p;
  p.frame_rate_hz = pose.frame_rate_hz;
  p.frames = Tensor({t, kPoseChannels},
                    std::vector<double>(pose.frames.data.begin(), pose.frames.data.begin() + t * kPoseChannels));
  return {std::move(m), std::move(p)};
}

namespace {

void channel_moments(std::span<const Tensor* const> streams, int channels, std::vector<double>& mean,
                     std::vector<double>& stddev, const char* what) {
  mean.assign(channels, 0.0);
  stddev.assign(channels, 0.0);
  double n = 0.0;
  for (const Tensor* s : streams) {
    for (idx r = 0; r < s->rows(); ++r)
      for (int c = 0; c < channels; ++c) mean[c] += (*s)(r, c);
    n += static_cast<double>(s->rows());
  }
  if (n == 0.0) throw Error(std::string("fit_stats: no ") + what + " frames");
  for (auto& m : mean) m /= n;
  for (const Tensor* s : streams) {
    for (idx r = 0; r < s->rows(); ++r)
      for (int c = 0; c < channels; ++c) {
        const double d = (*s)(r, c) - mean[c];
        stddev[c] += d * d;
      }
  }
  for (int c = 0; c < channels; ++c) {
    stddev[c] = std::sqrt(stddev[c] / n);
    if (!(stddev[c] > 1e-12 * std::max(1.0, std::abs(mean[c])))) {
      throw Error(std::string("fit_stats: ") + what + " channel " + std::to_string(c) + " has zero variance");
    }
  }
}

}  // namespace

FeatureStats fit_stats(std::span<const std::pair<MelSpectrogram, PoseSequence>> corpus) {
  if (corpus.empty()) throw Error("fit_stats: empty corpus");
  std::vector<const Tensor*> mels, poses;
  for (const auto& [m, p] : corpus) {
    m.validate();
    p.validate();
    mels.push_back(&m.frames);
    poses.push_back(&p.frames);
  }
  FeatureStats st;
  channel_moments(mels, kMelBins, st.mel_mean, st.mel_std, "mel");
  channel_moments(poses, kPoseChannels, st.pose_mean, st.pose_std, "pose");
  return st;
}

namespace {

Tensor affine(const Tensor& x, const FeatureStats& stats, Stream stream, bool forward) {
  const auto& mean = stream == Stream::kMel ? stats.mel_mean : stats.pose_mean;
  const auto& sd = stream == Stream::kMel ? stats.mel_std : stats.pose_std;
  if (x.dim() != 2 || x.cols() != static_cast<idx>(mean.size())) {
    throw Error("normalize: tensor " + shape_str(x.shape) + " does not match stats with " + std::to_string(mean.size()) +
                " channels");
  }
  Tensor out = x;
  const idx c = x.cols();
  for (idx r = 0; r < x.rows(); ++r)
    for (idx j = 0; j < c; ++j) {
      double& v = out.data[r * c + j];
      v = forward ? (v - mean[j]) / sd[j] : v * sd[j] + mean[j];
    }
  return out;
}

}  // namespace

Tensor normalize(const Tensor& x, const FeatureStats& stats, Stream stream) { return affine(x, stats, stream, true); }

Tensor denormalize(const Tensor& x, const FeatureStats& stats, Stream stream) {
  return affine(x, stats, stream, false);
}

void save_mel(const std::filesystem::path& path, const MelSpectrogram& m) {
  m.validate();
  ftz::write_file(path, {m.frames, m.frame_rate_hz, "mel", ftz::Dtype::kF32});
}

MelSpectrogram load_mel(const std::filesystem::path& path) {
  auto rec = ftz::read_file(path);
  if (rec.kind != "mel") throw Error(path.string() + ": expected kind \"mel\", found \"" + rec.kind + "\"");
  MelSpectrogram m{std::move(rec.tensor), rec.rate_hz};
  m.validate();
  return m;
}

void save_pose(const std::filesystem::path& path, const PoseSequence& p) {
  p.validate();
  ftz::write_file(path, {p.frames, p.frame_rate_hz, "pose", ftz::Dtype::kF32});
}

PoseSequence load_pose(const std::filesystem::path& path) {
  auto rec = ftz::read_file(path);
  if (rec.kind != "pose") throw Error(path.string() + ": expected kind \"pose\", found \"" + rec.kind + "\"");
  PoseSequence p{std::move(rec.tensor), rec.rate_hz};
  p.validate();
  return p;
}

namespace {

template <typename T>
T read_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_wav: cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) || std::memcmp(bytes.data() + 8, "WAVE", 4)) {
    throw Error("read_wav: " + path.string() + " is not a RIFF/WAVE file");
  }
  int format = 0, channels = 0, bits = 0;
  Waveform w;
  std::size_t pos = 12;
  const char* data = nullptr;
  std::uint32_t data_len = 0;
  while (pos + 8 <= bytes.size()) {
    const char* id = bytes.data() + pos;
    const auto len = read_le<std::uint32_t>(bytes.data() + pos + 4);
    const char* body = bytes.data() + pos + 8;
    if (pos + 8 + len > bytes.size()) throw Error("read_wav: truncated chunk in " + path.string());
    if (!std::memcmp(id, "fmt ", 4)) {
      format = read_le<std::uint16_t>(body);
      channels = read_le<std::uint16_t>(body + 2);
      w.sample_rate = static_cast<int>(read_le<std::uint32_t>(body + 4));
      bits = read_le<std::uint16_t>(body + 14);
      if (format == 0xFFFE && len >= 26) format = read_le<std::uint16_t>(body + 24);
    } else if (!std::memcmp(id, "data", 4)) {
      data = body;
      data_len = len;
    }
    pos += 8 + len + (len & 1);
  }
  if (!data || channels <= 0) throw Error("read_wav: missing fmt or data chunk in " + path.string());
  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32) throw Error("read_wav: only 16-bit PCM and 32-bit float WAV are supported");
  const std::size_t frame_bytes = static_cast<std::size_t>(bits / 8) * channels;
  const std::size_t n = data_len / frame_bytes;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const char* s = data + i * frame_bytes + static_cast<std::size_t>(c) * (bits / 8);
      acc += pcm16 ? read_le<std::int16_t>(s) / 32768.0 : static_cast<double>(read_le<float>(s));
    }
    w.samples[i] = acc / channels;
  }
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_wav: cannot open " + path.string());
  auto put32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  auto put16 = [&](std::uint16_t v) { os.write(reinterpret_cast<const char*>(&v), 2); };
  const auto data_len = static_cast<std::uint32_t>(w.samples.size() * 2);
  os.write("RIFF", 4);
  put32(36 + data_len);
  os.write("WAVEfmt ", 8);
  put32(16);
  put16(1);
  put16(1);
  put32(static_cast<std::uint32_t>(w.sample_rate));
  put32(static_cast<std::uint32_t>(w.sample_rate) * 2);
  put16(2);
  put16(16);
  os.write("data", 4);
  put32(data_len);
  for (double s : w.samples) {
    const auto v = static_cast<std::int16_t>(std::lround(std::clamp(s, -1.0, 32767.0 / 32768.0) * 32768.0));
    put16(static_cast<std::uint16_t>(v));
  }
  if (!os) throw Error("write_wav: write failed for " + path.string());
}

}  // namespace jsyn::features
