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

#ifndef DSTKIT_CORPUS_HPP_
#define DSTKIT_CORPUS_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dstkit/stateparse.hpp"

namespace dst {

enum class Dataset {
  multiwoz21,
  multiwoz22,
  multiwoz23,
  multiwoz24,
  woz20,
  dstc2,
};

enum class Split { train, dev, test };

Dataset dataset_from_string(const std::string& s);  // throws on unknown id
std::string to_string(Dataset d);
Split split_from_string(const std::string& s);
std::string to_string(Split s);

enum class Speaker { user, agent };

struct Utterance {
  Speaker speaker = Speaker::user;
  std::string text;  // verbatim source text, NFC-normalized and trimmed

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

// One user turn plus the agent response that preceded it. Turn 1 never has
// an agent utterance; every later turn has exactly one. gold_state is the
// cumulative state as of this turn.
struct Turn {
  int index = 0;  // 1-based, contiguous
  std::optional<Utterance> agent_utterance;
  Utterance user_utterance;
  BeliefState gold_state;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Dialogue {
  std::string id;  // source dialogue identifier, unique within (dataset, split)
  Dataset dataset = Dataset::multiwoz21;
  Split split = Split::train;
  std::vector<Turn> turns;

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

struct SkippedDialogue {
  std::string id;
  std::string reason;
};

struct IngestOptions {
  // DSTC2 only: read the transcription field instead of the 1-best ASR
  // hypothesis.
  bool dstc2_transcriptions = false;
};

struct IngestReport {
  Dataset dataset = Dataset::multiwoz21;
  Split split = Split::train;
  std::size_t dialogues = 0;
  std::size_t turns = 0;
  std::vector<SkippedDialogue> skipped;
  // Turns whose state dropped a slot relative to the previous turn. The
  // source annotation is preserved either way; this is advisory only.
  std::size_t monotonicity_warnings = 0;
  std::vector<std::string> notes;
};

// Reads the unmodified upstream release files for `dataset` from `raw_dir`
// and returns normalized dialogues for `split`, in source file order then
// source key order. Utterance text is kept verbatim apart from NFC and
// whitespace trimming; slot names and values are lowercased and values have
// whitespace runs collapsed. A missing required file is fatal; a dialogue
// whose annotation cannot be mapped is skipped and recorded in the report.
std::vector<Dialogue> ingest(Dataset dataset, const std::filesystem::path& raw_dir,
                             Split split, IngestReport* report = nullptr,
                             const IngestOptions& options = {});

// One JSON object per line per dialogue:
//   {"id", "dataset", "split", "turns": [{"index", "agent", "user", "state"}]}
// with keys in that order, UTF-8 and "\n" line endings. Output is
// byte-reproducible across runs.
void write_normalized(const std::vector<Dialogue>& dialogues,
                      const std::filesystem::path& out);

// Inverse of write_normalized. A malformed line is fatal and names the line.
std::vector<Dialogue> read_normalized(const std::filesystem::path& path);

}  // namespace dst

#endif  // DSTKIT_CORPUS_HPP_
