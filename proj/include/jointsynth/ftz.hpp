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

// FTZ1 tensor files.
//
// Line 1 is a JSON header
//   {"shape":[T,C],"dtype":"f32","rate_hz":<real>,"kind":"mel"|"pose"}
// terminated by '\n', followed by prod(shape) little-endian values in
// row-major order. Feature files are always f32. Checkpoint parameters use
// kind "param" and may use dtype "f64" so that a save/load cycle is exact.

#ifndef JOINTSYNTH_FTZ_HPP_
#define JOINTSYNTH_FTZ_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>

#include "jointsynth/tensor.hpp"

namespace jsyn::ftz {

enum class Dtype { kF32, kF64 };

struct Record {
  Tensor tensor;
  double rate_hz = 0.0;
  std::string kind;
  Dtype dtype = Dtype::kF32;
};

void write(std::ostream& os, const Record& rec);
Record read(std::istream& is);

void write_file(const std::filesystem::path& path, const Record& rec);
Record read_file(const std::filesystem::path& path);

}  // namespace jsyn::ftz

#endif  // JOINTSYNTH_FTZ_HPP_
