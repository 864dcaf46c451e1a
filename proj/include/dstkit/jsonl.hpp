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

#ifndef DSTKIT_JSONL_HPP_
#define DSTKIT_JSONL_HPP_

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

namespace dst {

using ordered_json = nlohmann::ordered_json;

// Calls fn(line_number, parsed) for each non-empty line; line numbers are
// 1-based. A malformed line throws with "<path>:<line>: ...".
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const ordered_json&)>& fn);

// Opens for writing with "\n" line endings; throws on failure, naming the path.
std::ofstream open_output(const std::filesystem::path& path);

std::ifstream open_input(const std::filesystem::path& path);

// Writes "<out>.meta.json" next to a data file: the fully-resolved
// configuration of the command that produced it. Content is deterministic
// (no timestamps), so reruns stay byte-identical.
void write_meta_sidecar(const std::filesystem::path& data_path,
                        const ordered_json& meta);

// Reads the sidecar for a data file; returns null json when absent.
ordered_json read_meta_sidecar(const std::filesystem::path& data_path);

}  // namespace dst

#endif  // DSTKIT_JSONL_HPP_
