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

#ifndef DSTKIT_SERIALIZE_HPP_
#define DSTKIT_SERIALIZE_HPP_

#include <functional>
#include <string>
#include <vector>

#include "dstkit/corpus.hpp"

namespace dst {

enum class ContextMode { full_history, recurrent };
enum class StateSource { gold, predicted };

struct SerializationConfig {
  ContextMode mode = ContextMode::full_history;
  int n_recent_turns = 1;                         // recurrent only
  StateSource state_source = StateSource::gold;   // recurrent only
};

struct SerializedExample {
  std::string dialogue_id;
  int turn_index = 0;
  std::string input_text;
  std::string target_text;
  SerializationConfig config;
};

// Concatenates "agent: ..."/"user: ..." segments for turns 1..turn_index,
// joined by single spaces, chronological order. The target is the rendered
// gold cumulative state at turn_index.
SerializedExample serialize_full(const Dialogue& dialogue, int turn_index);

// "<state> " + rendered carry_state + " <utterance> " + the utterance
// segments of the n most recent turns. carry_state is the state as of turn
// turn_index - n (empty when turn_index <= n). The double space of an empty
// state body collapses: "<state> <utterance> ...". The target is the FULL
// gold cumulative state at turn_index, same as the full-history target.
SerializedExample serialize_recurrent(const Dialogue& dialogue, int turn_index,
                                      int n_recent_turns,
                                      const BeliefState& carry_state);

// One example per (dialogue, turn), dialogue order preserved, turns
// ascending. Recurrent corpora use gold carry states (teacher forcing).
void emit_corpus(const std::vector<Dialogue>& dialogues,
                 const SerializationConfig& config,
                 const std::function<void(const SerializedExample&)>& sink);

std::vector<SerializedExample> emit_corpus(const std::vector<Dialogue>& dialogues,
                                           const SerializationConfig& config);

}  // namespace dst

#endif  // DSTKIT_SERIALIZE_HPP_
