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


#include "jointsynth/model.hpp"

#include <cstring>
#include <fstream>

#include "jointsynth/ftz.hpp"

namespace jsyn::model {

using nlohmann::json;

namespace {

constexpr const char* kMagic = "JSYNCKPT1";

json widths_json(const std::vector<std::int64_t>& w) { return json(w); }

template <typename T>
void get_to(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

json ModelConfig::to_json() const {
  const auto& e = encoder;
  return json{
      {"encoder",
       {{"n_symbols", e.n_symbols}, {"n_mel", e.n_mel}, {"hidden", e.hidden}, {"heads", e.heads},
        {"layers", e.layers}, {"ffn_hidden", e.ffn_hidden}, {"ffn_kernel", e.ffn_kernel},
        {"prenet_kernel", e.prenet_kernel}, {"rel_window", e.rel_window}, {"max_len", e.max_len},
        {"dp_hidden", e.dp_hidden}, {"dp_kernel", e.dp_kernel}}},
      {"acoustic",
       {{"n_mel", acoustic.n_mel}, {"widths", widths_json(acoustic.widths)}, {"time_dim", acoustic.time_dim},
        {"centered_input", acoustic.centered_input}}},
      {"prenet",
       {{"in_channels", prenet.in_channels}, {"dim", prenet.dim}, {"layers", prenet.layers}, {"heads", prenet.heads},
        {"ff_mult", prenet.ff_mult}, {"conv_kernel", prenet.conv_kernel}, {"out_channels", prenet.out_channels}}},
      {"gesture",
       {{"channels", gesture.channels}, {"widths", widths_json(gesture.widths)}, {"kernel", gesture.kernel},
        {"time_dim", gesture.time_dim}, {"centered_input", gesture.centered_input}}},
      {"schedule", {{"beta0", schedule.beta0}, {"beta1", schedule.beta1}}},
      {"score",
       {{"kind", score.kind == diffusion::Parameterization::kDirect ? "direct" : "preconditioned"},
        {"sigma_data", score.sigma_data}}},
      {"init_seed", init_seed},
  };
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  try {
    if (j.contains("encoder")) {
      const auto& e = j.at("encoder");
      get_to(e, "n_symbols", c.encoder.n_symbols);
      get_to(e, "n_mel", c.encoder.n_mel);
      get_to(e, "hidden", c.encoder.hidden);
      get_to(e, "heads", c.encoder.heads);
      get_to(e, "layers", c.encoder.layers);
      get_to(e, "ffn_hidden", c.encoder.ffn_hidden);
      get_to(e, "ffn_kernel", c.encoder.ffn_kernel);
      get_to(e, "prenet_kernel", c.encoder.prenet_kernel);
      get_to(e, "rel_window", c.encoder.rel_window);
      get_to(e, "max_len", c.encoder.max_len);
      get_to(e, "dp_hidden", c.encoder.dp_hidden);
      get_to(e, "dp_kernel", c.encoder.dp_kernel);
    }
    if (j.contains("acoustic")) {
      const auto& a = j.at("acoustic");
      get_to(a, "n_mel", c.acoustic.n_mel);
      get_to(a, "widths", c.acoustic.widths);
      get_to(a, "time_dim", c.acoustic.time_dim);
      get_to(a, "centered_input", c.acoustic.centered_input);
    }
    if (j.contains("prenet")) {
      const auto& p = j.at("prenet");
      get_to(p, "in_channels", c.prenet.in_channels);
      get_to(p, "dim", c.prenet.dim);
      get_to(p, "layers", c.prenet.layers);
      get_to(p, "heads", c.prenet.heads);
      get_to(p, "ff_mult", c.prenet.ff_mult);
      get_to(p, "conv_kernel", c.prenet.conv_kernel);
      get_to(p, "out_channels", c.prenet.out_channels);
    }
    if (j.contains("gesture")) {
      const auto& g = j.at("gesture");
      get_to(g, "channels", c.gesture.channels);
      get_to(g, "widths", c.gesture.widths);
      get_to(g, "kernel", c.gesture.kernel);
      get_to(g, "time_dim", c.gesture.time_dim);
      get_to(g, "centered_input", c.gesture.centered_input);
    }
    if (j.contains("schedule")) {
      get_to(j.at("schedule"), "beta0", c.schedule.beta0);
      get_to(j.at("schedule"), "beta1", c.schedule.beta1);
    }
    if (j.contains("score")) {
      const auto& s = j.at("score");
      const std::string kind = s.value("kind", std::string("preconditioned"));
      if (kind == "direct") {
        c.score.kind = diffusion::Parameterization::kDirect;
      } else if (kind == "preconditioned") {
        c.score.kind = diffusion::Parameterization::kPreconditioned;
      } else {
        throw Error("ModelConfig: unknown score kind '" + kind + "'");
      }
      get_to(s, "sigma_data", c.score.sigma_data);
    }
    get_to(j, "init_seed", c.init_seed);
  } catch (const json::exception& e) {
    throw Error(std::string("ModelConfig: ") + e.what());
  }
  return c;
}

namespace {

ModelConfig checked(ModelConfig cfg, const text::SymbolInventory& inv) {
  cfg.encoder.n_symbols = inv.size();
  cfg.schedule.validate();
  const bool centered = cfg.score.kind == diffusion::Parameterization::kPreconditioned;
  cfg.acoustic.centered_input = centered;
  cfg.gesture.centered_input = centered;
  if (cfg.acoustic.n_mel != cfg.encoder.n_mel || cfg.prenet.in_channels != cfg.encoder.n_mel) {
    throw Error("ModelConfig: mel channel counts disagree between encoder, acoustic decoder and pre-net");
  }
  if (cfg.prenet.out_channels != cfg.gesture.channels) {
    throw Error("ModelConfig: pre-net output channels must equal gesture channels");
  }
  return cfg;
}

}  // namespace

JointModel::JointModel(ModelConfig cfg, text::SymbolInventory inventory)
    : cfg_(checked(std::move(cfg), inventory)),
      inventory_(std::move(inventory)),
      init_rng_(cfg_.init_seed),
      encoder(params_, cfg_.encoder, init_rng_),
      duration(params_, cfg_.encoder, init_rng_),
      mel_unet(params_, cfg_.acoustic, init_rng_),
      prenet(params_, cfg_.prenet, init_rng_),
      pose_unet(params_, cfg_.gesture, init_rng_) {}

namespace {

std::vector<ag::Var> collect(const nn::ParamStore& ps, const std::vector<std::string>& prefixes) {
  std::vector<ag::Var> out;
  for (const auto& p : prefixes) {
    auto v = ps.with_prefix(p);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace

std::vector<ag::Var> JointModel::tts_params() const { return collect(params_, kTtsPrefixes); }
std::vector<ag::Var> JointModel::motion_params() const { return collect(params_, kMotionPrefixes); }

diffusion::ScoreNet JointModel::mel_score() const {
  const auto* net = &mel_unet;
  return diffusion::make_score_net([net](const ag::Var& x, const ag::Var& mu, double t) { return (*net)(x, mu, t); },
                                   cfg_.score, cfg_.schedule);
}

diffusion::ScoreNet JointModel::pose_score() const {
  const auto* net = &pose_unet;
  return diffusion::make_score_net([net](const ag::Var& x, const ag::Var& mu, double t) { return (*net)(x, mu, t); },
                                   cfg_.score, cfg_.schedule);
}

std::uint64_t hash_params(const std::vector<ag::Var>& vars) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& v : vars) {
    for (auto d : v.shape()) mix(&d, sizeof d);
    mix(v.value().data.data(), v.value().data.size() * sizeof(double));
  }
  return h;
}

void save_checkpoint(const std::filesystem::path& path, const JointModel& m, const json& meta) {
  json manifest;
  manifest["config"] = m.config().to_json();
  manifest["inventory"] = json::parse(m.inventory().to_json());
  manifest["inventory_hash"] = m.inventory().hash();
  manifest["stats"] = {{"mel_mean", m.stats.mel_mean},
                       {"mel_std", m.stats.mel_std},
                       {"pose_mean", m.stats.pose_mean},
                       {"pose_std", m.stats.pose_std}};
  json entries = json::array();
  for (const auto& [name, v] : m.params().entries()) entries.push_back({{"name", name}, {"shape", v.shape()}});
  manifest["entries"] = entries;
  manifest["meta"] = meta.is_null() ? json::object() : meta;

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error("save_checkpoint: cannot write " + tmp.string());
    os << kMagic << '\n' << manifest.dump() << '\n';
    for (const auto& [name, v] : m.params().entries()) {
      ftz::write(os, ftz::Record{v.value(), 0.0, "param", ftz::Dtype::kF64});
    }
    os.flush();
    if (!os) throw Error("save_checkpoint: write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("save_checkpoint: cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

std::unique_ptr<JointModel> load_checkpoint(const std::filesystem::path& path, json* meta) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("load_checkpoint: cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kMagic) throw Error("load_checkpoint: " + path.string() + " is not a checkpoint");
  json manifest;
  try {
    std::getline(is, line);
    manifest = json::parse(line);
  } catch (const json::exception& e) {
    throw Error("load_checkpoint: bad manifest in " + path.string() + ": " + e.what());
  }
  auto inv = text::SymbolInventory::from_json(manifest.at("inventory").dump());
  if (inv.hash() != manifest.at("inventory_hash").get<std::uint64_t>()) {
    throw Error("load_checkpoint: inventory hash mismatch in " + path.string());
  }
  auto model = std::make_unique<JointModel>(ModelConfig::from_json(manifest.at("config")), std::move(inv));
  const auto& st = manifest.at("stats");
  st.at("mel_mean").get_to(model->stats.mel_mean);
  st.at("mel_std").get_to(model->stats.mel_std);
  st.at("pose_mean").get_to(model->stats.pose_mean);
  st.at("pose_std").get_to(model->stats.pose_std);

  const auto& entries = manifest.at("entries");
  if (entries.size() != model->params().entries().size()) {
    throw Error("load_checkpoint: " + std::to_string(entries.size()) + " tensors in archive, model has " +
                std::to_string(model->params().entries().size()));
  }
  for (const auto& e : entries) {
    const auto name = e.at("name").get<std::string>();
    ftz::Record rec = ftz::read(is);
    ag::Var v = model->params().get(name);
    require_shape(rec.tensor, v.shape(), "load_checkpoint " + name);
    v.mutable_value() = std::move(rec.tensor);
  }
  if (meta) *meta = manifest.value("meta", json::object());
  return model;
}

}  // namespace jsyn::model
