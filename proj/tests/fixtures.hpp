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


// Small model configurations shared by the training and synthesis tests.

#ifndef JOINTSYNTH_TESTS_FIXTURES_HPP_
#define JOINTSYNTH_TESTS_FIXTURES_HPP_

#include "jointsynth/model.hpp"

namespace jsyn::testing {

inline model::ModelConfig tiny_model_config() {
  model::ModelConfig c;
  c.encoder.hidden = 16;
  c.encoder.heads = 2;
  c.encoder.layers = 1;
  c.encoder.ffn_hidden = 32;
  c.encoder.dp_hidden = 16;
  c.acoustic.widths = {4, 4};
  c.acoustic.time_dim = 8;
  c.prenet.dim = 16;
  c.prenet.layers = 1;
  c.prenet.ff_mult = 2;
  c.prenet.conv_kernel = 5;
  c.gesture.widths = {8, 8};
  c.gesture.time_dim = 8;
  return c;
}

}  // namespace jsyn::testing

#endif  // JOINTSYNTH_TESTS_FIXTURES_HPP_
