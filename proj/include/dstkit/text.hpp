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

#ifndef DSTKIT_TEXT_HPP_
#define DSTKIT_TEXT_HPP_

#include <string>
#include <vector>

namespace dst {

// Unicode NFC normalization (ICU-backed). Invalid UTF-8 sequences are
// replaced with U+FFFD.
std::string nfc(const std::string& utf8);

// ASCII-only lowercasing. Case folding outside [A-Z] is intentionally not
// applied; the string grammar treats non-ASCII bytes as opaque.
std::string ascii_lower(std::string s);

// Strips leading/trailing ASCII whitespace.
std::string trim(const std::string& s);

// Trims and collapses internal ASCII whitespace runs to single spaces.
std::string collapse_whitespace(const std::string& s);

std::vector<std::string> split_whitespace(const std::string& s);

// Lowercased whitespace-split words, the token unit for ROUGE scoring.
std::vector<std::string> tokenize_lower(const std::string& s);

// Splits text into sentences on [.?!]+ followed by whitespace, keeping the
// delimiter attached. A final unterminated sentence is kept as-is.
std::vector<std::string> split_sentences(const std::string& text);

}  // namespace dst

#endif  // DSTKIT_TEXT_HPP_
