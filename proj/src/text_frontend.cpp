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

#include "jointsynth/text_frontend.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "jointsynth/tensor.hpp"

namespace jsyn::text {

SymbolInventory SymbolInventory::standard() {
  std::vector<std::string> s = {"<pad>", "<blank>"};
  for (char c = 'a'; c <= 'z'; ++c) s.emplace_back(1, c);
  s.emplace_back("'");
  for (const char* p : {"AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH", "EH", "ER", "EY",
                        "F",  "G",  "HH", "IH", "IY", "JH", "K",  "L",  "M",  "N",  "NG", "OW", "OY",
                        "P",  "R",  "S",  "SH", "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH"}) {
    s.emplace_back(p);
  }
  return SymbolInventory(std::move(s));
}

SymbolInventory::SymbolInventory(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.size() < 2 || symbols_[kPad] != "<pad>" || symbols_[kBlank] != "<blank>") {
    throw Error("SymbolInventory: first entries must be <pad> and <blank>");
  }
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!index_.emplace(symbols_[i], static_cast<std::int64_t>(i)).second) {
      throw Error("SymbolInventory: duplicate symbol '" + symbols_[i] + "'");
    }
  }
}

const std::string& SymbolInventory::name(std::int64_t id) const {
  if (id < 0 || id >= size()) throw Error("symbol id " + std::to_string(id) + " out of range [0, " + std::to_string(size()) + ")");
  return symbols_[static_cast<std::size_t>(id)];
}

std::int64_t SymbolInventory::find(const std::string& symbol) const {
  auto it = index_.find(symbol);
  return it == index_.end() ? -1 : it->second;
}

std::string SymbolInventory::to_json() const { return nlohmann::json(symbols_).dump(); }

SymbolInventory SymbolInventory::from_json(const std::string& json) {
  try {
    return SymbolInventory(nlohmann::json::parse(json).get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("SymbolInventory: bad JSON: ") + e.what());
  }
}

std::uint64_t SymbolInventory::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& s : symbols_) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string strip_stress(std::string phone) {
  while (!phone.empty() && std::isdigit(static_cast<unsigned char>(phone.back()))) phone.pop_back();
  return phone;
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("load_lexicon: cannot open " + path.string());
  Lexicon lex;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line.rfind(";;;", 0) == 0) continue;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word.find('(') != std::string::npos) continue;
    std::vector<std::string> phones;
    for (std::string p; ls >> p;) phones.push_back(strip_stress(p));
    if (!phones.empty()) lex.emplace(upper(word), std::move(phones));
  }
  return lex;
}

PhonemeSequence tokenize(const std::string& text, const SymbolInventory& inv, const Lexicon* lexicon) {
  std::istringstream ws(text);
  std::vector<std::string> words;
  for (std::string w; ws >> w;) words.push_back(w);
  if (words.empty()) throw Error("tokenize: text is empty after whitespace normalization");

  PhonemeSequence seq;
  seq.source_text = text;
  seq.ids.push_back(kBlank);
  std::set<std::string> offenders;
  for (const auto& w : words) {
    const std::vector<std::string>* phones = nullptr;
    if (lexicon) {
      auto it = lexicon->find(upper(w));
      if (it != lexicon->end()) phones = &it->second;
    }
    if (phones) {
      for (const auto& p : *phones) {
        const auto id = inv.find(p);
        if (id < 0) {
          offenders.insert(p);
        } else {
          seq.ids.push_back(id);
        }
      }
    } else {
      for (char c : lower(w)) {
        const auto id = inv.find(std::string(1, c));
        if (id < 0 || id == kPad || id == kBlank) {
          offenders.insert(std::string(1, c));
        } else {
          seq.ids.push_back(id);
        }
      }
    }
    seq.ids.push_back(kBlank);
  }
  if (!offenders.empty()) {
    std::string list;
    for (const auto& o : offenders) list += (list.empty() ? "'" : ", '") + o + "'";
    throw Error("tokenize: symbols not in the inventory: " + list);
  }
  return seq;
}

std::vector<std::string> detokenize(const std::vector<std::int64_t>& ids, const SymbolInventory& inv) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(inv.name(id));
  return out;
}

}  // namespace jsyn::text
