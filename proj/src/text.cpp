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

#include "dstkit/text.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include <unicode/unorm2.h>
#include <unicode/ustring.h>
#include <unicode/utypes.h>

namespace dst {

namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return c < 0x80; });
}

}  // namespace

std::string nfc(const std::string& utf8) {
  // ASCII is already NFC; skip the ICU round-trip for the common case.
  if (is_ascii(utf8)) return utf8;

  UErrorCode status = U_ZERO_ERROR;
  const UNormalizer2* norm = unorm2_getNFCInstance(&status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC unavailable");

  std::u16string u16(utf8.size() + 1, u'\0');
  int32_t u16_len = 0;
  u_strFromUTF8Lenient(u16.data(), static_cast<int32_t>(u16.size()), &u16_len,
                       utf8.data(), static_cast<int32_t>(utf8.size()), &status);
  if (U_FAILURE(status)) throw std::runtime_error("UTF-8 decode failed");
  u16.resize(u16_len);

  std::u16string out(u16.size() * 3 + 1, u'\0');
  int32_t out_len = unorm2_normalize(norm, u16.data(), u16_len, out.data(),
                                     static_cast<int32_t>(out.size()), &status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  out.resize(out_len);

  std::string result(out.size() * 4 + 1, '\0');
  int32_t result_len = 0;
  u_strToUTF8(result.data(), static_cast<int32_t>(result.size()), &result_len,
              out.data(), out_len, &status);
  if (U_FAILURE(status)) throw std::runtime_error("UTF-8 encode failed");
  result.resize(result_len);
  return result;
}

std::string ascii_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c;
  });
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_ascii_space(s[b])) ++b;
  while (e > b && is_ascii_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string collapse_whitespace(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // swallows leading whitespace
  for (char c : s) {
    if (is_ascii_space(c)) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::vector<std::string> split_whitespace(const std::string& s) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_ascii_space(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_ascii_space(s[i])) ++i;
    if (i > start) tokens.push_back(s.substr(start, i - start));
  }
  return tokens;
}

std::vector<std::string> tokenize_lower(const std::string& s) {
  return split_whitespace(ascii_lower(s));
}

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  std::size_t i = 0;
  auto is_end_punct = [](char c) { return c == '.' || c == '?' || c == '!'; };
  while (i < text.size()) {
    if (is_end_punct(text[i])) {
      std::size_t punct_end = i;
      while (punct_end + 1 < text.size() && is_end_punct(text[punct_end + 1]))
        ++punct_end;
      if (punct_end + 1 >= text.size() || is_ascii_space(text[punct_end + 1])) {
        std::string sent = trim(text.substr(start, punct_end + 1 - start));
        if (!sent.empty()) sentences.push_back(sent);
        i = punct_end + 1;
        while (i < text.size() && is_ascii_space(text[i])) ++i;
        start = i;
        continue;
      }
      i = punct_end + 1;  // punctuation inside a token (e.g. "14:30.5x")
      continue;
    }
    ++i;
  }
  if (start < text.size()) {
    std::string tail = trim(text.substr(start));
    if (!tail.empty()) sentences.push_back(tail);
  }
  return sentences;
}

}  // namespace dst
