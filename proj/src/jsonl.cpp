// Copyright 2026 The DSTKit Authors.
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

#include "dstkit/jsonl.hpp"

#include <stdexcept>

namespace dst {

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const ordered_json&)>& fn) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json parsed = ordered_json::parse(line, nullptr, false);
    if (parsed.is_discarded()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": malformed JSON line");
    }
    fn(lineno, parsed);
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  return in;
}

static std::filesystem::path sidecar_path(const std::filesystem::path& data_path) {
  std::filesystem::path p = data_path;
  p += ".meta.json";
  return p;
}

void write_meta_sidecar(const std::filesystem::path& data_path,
                        const ordered_json& meta) {
  std::ofstream out = open_output(sidecar_path(data_path));
  out << meta.dump(2) << "\n";
}

ordered_json read_meta_sidecar(const std::filesystem::path& data_path) {
  std::filesystem::path p = sidecar_path(data_path);
  std::ifstream in(p, std::ios::binary);
  if (!in) return ordered_json();
  ordered_json meta = ordered_json::parse(in, nullptr, false);
  if (meta.is_discarded()) return ordered_json();
  return meta;
}

}  // namespace dst
