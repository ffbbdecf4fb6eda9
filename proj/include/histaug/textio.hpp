// Copyright 2026 The histaug Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "histaug/error.hpp"

namespace histaug {

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out << text;
  require(out.good(), ErrorKind::Io, "write failed for " + path.string());
}

/// Raw little-endian float32 arrays, as stored in model directories.
inline void write_blob(const std::filesystem::path& path, const float* data, std::size_t count) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(float)));
  require(out.good(), ErrorKind::Io, "write failed for " + path.string());
}

inline void read_blob(const std::filesystem::path& path, float* data, std::size_t count) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  require(in.good(), ErrorKind::Io, "cannot read " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  require(bytes == count * sizeof(float), ErrorKind::Io,
          path.string() + ": expected " + std::to_string(count * sizeof(float)) + " bytes, found " +
              std::to_string(bytes));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(bytes));
}

}  // namespace histaug
