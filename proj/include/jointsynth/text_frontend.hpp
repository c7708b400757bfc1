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

#ifndef JOINTSYNTH_TEXT_FRONTEND_HPP_
#define JOINTSYNTH_TEXT_FRONTEND_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace jsyn::text {

inline constexpr std::int64_t kPad = 0;
inline constexpr std::int64_t kBlank = 1;

class SymbolInventory {
 public:
  // PAD, BLANK, lowercase graphemes a-z and apostrophe, then the 39 ARPAbet
  // phones without stress marks.
  static SymbolInventory standard();
  // `symbols` must start with the PAD and BLANK entries and be unique.
  explicit SymbolInventory(std::vector<std::string> symbols);

  std::int64_t size() const { return static_cast<std::int64_t>(symbols_.size()); }
  const std::string& name(std::int64_t id) const;
  // -1 when absent.
  std::int64_t find(const std::string& symbol) const;

  std::string to_json() const;
  static SymbolInventory from_json(const std::string& json);
  // FNV-1a over the ordered symbol list; stored in checkpoints.
  std::uint64_t hash() const;

  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, std::int64_t> index_;
};

// Upper-case word -> phones (stress digits already stripped).
using Lexicon = std::map<std::string, std::vector<std::string>>;

// Lines `WORD P1 P2 ...`; `;;;` comments and alternate `WORD(2)` entries skipped.
Lexicon load_lexicon(const std::filesystem::path& path);

struct PhonemeSequence {
  std::vector<std::int64_t> ids;
  std::string source_text;
};

// One BLANK at the start and one after every word. Words found in the lexicon
// emit their phones, other words their lowercase letters.
PhonemeSequence tokenize(const std::string& text, const SymbolInventory& inv, const Lexicon* lexicon = nullptr);

std::vector<std::string> detokenize(const std::vector<std::int64_t>& ids, const SymbolInventory& inv);

}  // namespace jsyn::text

#endif  // JOINTSYNTH_TEXT_FRONTEND_HPP_
