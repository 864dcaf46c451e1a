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

#include "dstkit/serialize.hpp"

#include <algorithm>
#include <stdexcept>

namespace dst {

namespace {

void check_turn_index(const Dialogue& dialogue, int turn_index) {
  if (turn_index < 1 || turn_index > static_cast<int>(dialogue.turns.size()))
    throw std::out_of_range("turn index " + std::to_string(turn_index) +
                            " out of range for dialogue " + dialogue.id + " (" +
                            std::to_string(dialogue.turns.size()) + " turns)");
}

// "agent: ..." then "user: ..." segments for turns [first, last], joined by
// single spaces in chronological order.
std::string utterance_block(const Dialogue& dialogue, int first, int last) {
  std::string out;
  auto append = [&out](const std::string& prefix, const std::string& text) {
    if (!out.empty()) out += " ";
    out += prefix;
    out += text;
  };
  for (int t = first; t <= last; ++t) {
    const Turn& turn = dialogue.turns[t - 1];
    if (turn.agent_utterance) append("agent: ", turn.agent_utterance->text);
    append("user: ", turn.user_utterance.text);
  }
  return out;
}

}  // namespace

SerializedExample serialize_full(const Dialogue& dialogue, int turn_index) {
  check_turn_index(dialogue, turn_index);
  SerializedExample ex;
  ex.dialogue_id = dialogue.id;
  ex.turn_index = turn_index;
  ex.input_text = utterance_block(dialogue, 1, turn_index);
  ex.target_text = render_state(dialogue.turns[turn_index - 1].gold_state);
  ex.config.mode = ContextMode::full_history;
  return ex;
}

SerializedExample serialize_recurrent(const Dialogue& dialogue, int turn_index,
                                      int n_recent_turns,
                                      const BeliefState& carry_state) {
  if (n_recent_turns < 1)
    throw std::invalid_argument("n_recent_turns must be >= 1");
  check_turn_index(dialogue, turn_index);

  int first = std::max(1, turn_index - n_recent_turns + 1);
  std::string state_body = render_state(carry_state);

  SerializedExample ex;
  ex.dialogue_id = dialogue.id;
  ex.turn_index = turn_index;
  ex.input_text = "<state> ";
  if (!state_body.empty()) {
    ex.input_text += state_body;
    ex.input_text += " ";
  }
  ex.input_text += "<utterance> ";
  ex.input_text += utterance_block(dialogue, first, turn_index);
  // The target carries the previous state's predictions over: it is the full
  // cumulative state, identical to the full-history target.
  ex.target_text = render_state(dialogue.turns[turn_index - 1].gold_state);
  ex.config.mode = ContextMode::recurrent;
  ex.config.n_recent_turns = n_recent_turns;
  return ex;
}

void emit_corpus(const std::vector<Dialogue>& dialogues,
                 const SerializationConfig& config,
                 const std::function<void(const SerializedExample&)>& sink) {
  for (const Dialogue& d : dialogues) {
    for (const Turn& turn : d.turns) {
      if (config.mode == ContextMode::full_history) {
        sink(serialize_full(d, turn.index));
      } else {
        // Teacher forcing: the carry state is the gold state at T-N, empty
        // for the first N turns.
        int carry_turn = turn.index - config.n_recent_turns;
        BeliefState carry;
        if (carry_turn >= 1) carry = d.turns[carry_turn - 1].gold_state;
        sink(serialize_recurrent(d, turn.index, config.n_recent_turns, carry));
      }
    }
  }
}

std::vector<SerializedExample> emit_corpus(const std::vector<Dialogue>& dialogues,
                                           const SerializationConfig& config) {
  std::vector<SerializedExample> out;
  emit_corpus(dialogues, config,
              [&out](const SerializedExample& ex) { out.push_back(ex); });
  return out;
}

}  // namespace dst
