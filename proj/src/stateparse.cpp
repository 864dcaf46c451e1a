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

#include "dstkit/stateparse.hpp"

#include "dstkit/text.hpp"

namespace dst {

namespace {

std::string canonical_piece(const std::string& s) {
  return nfc(collapse_whitespace(ascii_lower(s)));
}

}  // namespace

std::string render_state(const BeliefState& state) {
  std::string out;
  for (const auto& [slot, value] : state) {
    if (!out.empty()) out += "; ";
    out += slot;
    out += " = ";
    out += value;
  }
  return out;
}

ParseOutcome parse_state(const std::string& text) {
  ParseOutcome outcome;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t semi = text.find(';', pos);
    std::string fragment = text.substr(
        pos, semi == std::string::npos ? std::string::npos : semi - pos);
    pos = semi == std::string::npos ? text.size() + 1 : semi + 1;

    std::string trimmed = trim(fragment);
    if (trimmed.empty()) continue;

    // Values may legally contain "=", so only the first one separates.
    std::size_t eq = fragment.find('=');
    if (eq == std::string::npos) {
      outcome.dropped_fragments.push_back(trimmed);
      continue;
    }
    std::string slot = canonical_piece(fragment.substr(0, eq));
    std::string value = canonical_piece(fragment.substr(eq + 1));
    if (slot.empty() || value.empty()) {
      outcome.dropped_fragments.push_back(trimmed);
      continue;
    }
    auto [it, inserted] = outcome.state.emplace(slot, value);
    if (!inserted) {
      outcome.duplicate_slots.push_back(slot);
      it->second = value;  // last occurrence wins
    }
  }
  return outcome;
}

BeliefState canonicalize(const BeliefState& state) {
  BeliefState out;
  for (const auto& [slot, value] : state) {
    std::string s = canonical_piece(slot);
    std::string v = canonical_piece(value);
    if (s.empty() || v.empty()) continue;
    out[s] = v;
  }
  return out;
}

bool states_equal(const BeliefState& a, const BeliefState& b) {
  return canonicalize(a) == canonicalize(b);
}

}  // namespace dst
