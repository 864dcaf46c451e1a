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

#ifndef DSTKIT_STATEPARSE_HPP_
#define DSTKIT_STATEPARSE_HPP_

#include <map>
#include <string>
#include <vector>

namespace dst {

// Slot -> value constraints; iteration order is lexicographic by slot name.
using BeliefState = std::map<std::string, std::string>;

struct ParseOutcome {
  BeliefState state;
  // Fragments with no "=" (or an empty slot/value after trimming).
  std::vector<std::string> dropped_fragments;
  // Slots assigned more than once; the later value won.
  std::vector<std::string> duplicate_slots;
};

// Renders a state to the target grammar: "slot = value" entries joined by
// "; ", slots in lexicographic order. The empty state renders as "".
std::string render_state(const BeliefState& state);

// Parses untrusted predictor output back into a state. Splits on ";" and
// each fragment on its first "=" (values may legally contain "="). Never
// throws: the worst case is an empty state with everything dropped.
// Parsed slot names and values come out canonicalized.
ParseOutcome parse_state(const std::string& text);

// Lowercases, collapses whitespace runs and NFC-normalizes slot names and
// values. Entries whose slot or value canonicalizes to "" are removed.
// Idempotent.
BeliefState canonicalize(const BeliefState& state);

// Exact equality of canonicalized states: same slot set, all values match.
bool states_equal(const BeliefState& a, const BeliefState& b);

}  // namespace dst

#endif  // DSTKIT_STATEPARSE_HPP_
