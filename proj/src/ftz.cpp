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

#include "jointsynth/ftz.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace jsyn::ftz {

namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

}  // namespace

void write(std::ostream& os, const Record& rec) {
  nlohmann::json header;
  header["shape"] = rec.tensor.shape;
  header["dtype"] = rec.dtype == Dtype::kF32 ? "f32" : "f64";
  header["rate_hz"] = rec.rate_hz;
  header["kind"] = rec.kind;
  os << header.dump() << '\n';
  if (rec.dtype == Dtype::kF32) {
    std::vector<float> buf(rec.tensor.data.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = to_little(static_cast<float>(rec.tensor.data[i]));
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  } else {
    std::vector<double> buf(rec.tensor.data.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = to_little(rec.tensor.data[i]);
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
  }
  if (!os) throw Error("ftz: write failed");
}

Record read(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("ftz: missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("ftz: malformed header: ") + e.what());
  }
  Record rec;
  try {
    rec.tensor.shape = header.at("shape").get<Shape>();
    const auto dtype = header.at("dtype").get<std::string>();
    if (dtype == "f32") {
      rec.dtype = Dtype::kF32;
    } else if (dtype == "f64") {
      rec.dtype = Dtype::kF64;
    } else {
      throw Error("ftz: unsupported dtype '" + dtype + "'");
    }
    rec.rate_hz = header.at("rate_hz").get<double>();
    rec.kind = header.at("kind").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("ftz: header field error: ") + e.what());
  }
  const auto n = static_cast<std::size_t>(numel(rec.tensor.shape));
  rec.tensor.data.resize(n);
  if (rec.dtype == Dtype::kF32) {
    std::vector<float> buf(n);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (static_cast<std::size_t>(is.gcount()) != n * sizeof(float)) throw Error("ftz: truncated payload");
    for (std::size_t i = 0; i < n; ++i) rec.tensor.data[i] = to_little(buf[i]);
  } else {
    std::vector<double> buf(n);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (static_cast<std::size_t>(is.gcount()) != n * sizeof(double)) throw Error("ftz: truncated payload");
    for (std::size_t i = 0; i < n; ++i) rec.tensor.data[i] = to_little(buf[i]);
  }
  return rec;
}

void write_file(const std::filesystem::path& path, const Record& rec) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("ftz: cannot open " + path.string() + " for writing");
  write(os, rec);
}

Record read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("ftz: cannot open " + path.string());
  try {
    return read(is);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace jsyn::ftz
