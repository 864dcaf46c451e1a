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

#include "dstkit/corpus.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "dstkit/jsonl.hpp"
#include "dstkit/text.hpp"

namespace dst {

namespace fs = std::filesystem;

Dataset dataset_from_string(const std::string& s) {
  if (s == "multiwoz21") return Dataset::multiwoz21;
  if (s == "multiwoz22") return Dataset::multiwoz22;
  if (s == "multiwoz23") return Dataset::multiwoz23;
  if (s == "multiwoz24") return Dataset::multiwoz24;
  if (s == "woz20") return Dataset::woz20;
  if (s == "dstc2") return Dataset::dstc2;
  throw std::runtime_error("unknown dataset id: " + s);
}

std::string to_string(Dataset d) {
  switch (d) {
    case Dataset::multiwoz21: return "multiwoz21";
    case Dataset::multiwoz22: return "multiwoz22";
    case Dataset::multiwoz23: return "multiwoz23";
    case Dataset::multiwoz24: return "multiwoz24";
    case Dataset::woz20: return "woz20";
    case Dataset::dstc2: return "dstc2";
  }
  return "unknown";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  throw std::runtime_error("unknown split id: " + s);
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "unknown";
}

namespace {

// Slot values (and names) are lowercased with whitespace runs collapsed; this
// is the single value transformation, applied identically to gold and
// predictions so that exact-match scoring is well defined.
std::string norm_piece(const std::string& s) {
  return nfc(collapse_whitespace(ascii_lower(s)));
}

std::string norm_utterance(const std::string& s) { return nfc(trim(s)); }

bool droppable_value(const std::string& v) {
  return v.empty() || v == "none" || v == "not mentioned";
}

void put_slot(BeliefState& state, const std::string& slot, const std::string& value) {
  std::string s = norm_piece(slot);
  std::string v = norm_piece(value);
  if (s.empty() || droppable_value(v)) return;
  state[s] = v;
}

// First string out of a scalar-or-list annotation value; empty when neither.
std::string annotation_value(const ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    for (const auto& item : v)
      if (item.is_string() && !item.get<std::string>().empty())
        return item.get<std::string>();
  }
  return "";
}

ordered_json load_json_file(const fs::path& path) {
  if (!fs::exists(path))
    throw std::runtime_error("missing file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  ordered_json j = ordered_json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw std::runtime_error("malformed JSON: " + path.string());
  return j;
}

// Accepts the bare name plus the .txt/.json variants seen across releases.
fs::path find_id_list(const fs::path& raw_dir, const std::string& base) {
  for (const char* ext : {"", ".txt", ".json"}) {
    fs::path p = raw_dir / (base + ext);
    if (fs::exists(p)) return p;
  }
  throw std::runtime_error("missing file: " + (raw_dir / base).string() +
                           "[.txt|.json]");
}

std::set<std::string> read_id_list(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    std::string id = trim(line);
    if (!id.empty()) ids.insert(id);
  }
  return ids;
}

void check_invariants(const Dialogue& d) {
  if (d.turns.empty()) throw std::runtime_error("no turns");
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    const Turn& t = d.turns[i];
    if (t.index != static_cast<int>(i) + 1)
      throw std::runtime_error("turn indices not contiguous");
    if (t.index == 1 && t.agent_utterance.has_value())
      throw std::runtime_error("turn 1 has an agent utterance");
    if (t.index > 1 && !t.agent_utterance.has_value())
      throw std::runtime_error("turn " + std::to_string(t.index) +
                               " lacks an agent utterance");
    if (trim(t.user_utterance.text).empty())
      throw std::runtime_error("empty user utterance at turn " +
                               std::to_string(t.index));
    if (t.agent_utterance && trim(t.agent_utterance->text).empty())
      throw std::runtime_error("empty agent utterance at turn " +
                               std::to_string(t.index));
  }
}

std::size_t count_monotonicity_warnings(const Dialogue& d) {
  std::size_t warnings = 0;
  for (std::size_t i = 1; i < d.turns.size(); ++i) {
    const BeliefState& prev = d.turns[i - 1].gold_state;
    const BeliefState& cur = d.turns[i].gold_state;
    bool lost = std::any_of(prev.begin(), prev.end(), [&](const auto& kv) {
      return cur.find(kv.first) == cur.end();
    });
    if (lost) ++warnings;
  }
  return warnings;
}

struct Accumulator {
  Dataset dataset;
  Split split;
  IngestReport* report;
  std::vector<Dialogue> out;

  void accept(Dialogue&& d) {
    try {
      check_invariants(d);
    } catch (const std::exception& e) {
      skip(d.id, e.what());
      return;
    }
    if (report) {
      report->dialogues += 1;
      report->turns += d.turns.size();
      report->monotonicity_warnings += count_monotonicity_warnings(d);
    }
    out.push_back(std::move(d));
  }

  void skip(const std::string& id, const std::string& reason) {
    if (report) report->skipped.push_back({id, reason});
  }
};

// --- classic MultiWOZ (2.1 / 2.3 / 2.4): one data.json keyed by dialogue id,
// belief state in each system turn's metadata block -------------------------

BeliefState state_from_metadata(const ordered_json& metadata) {
  BeliefState state;
  if (!metadata.is_object()) return state;
  for (const auto& [domain, dom] : metadata.items()) {
    if (!dom.is_object()) continue;
    if (dom.contains("semi") && dom["semi"].is_object()) {
      for (const auto& [slot, v] : dom["semi"].items())
        put_slot(state, domain + "-" + slot, annotation_value(v));
    }
    if (dom.contains("book") && dom["book"].is_object()) {
      for (const auto& [slot, v] : dom["book"].items()) {
        if (slot == "booked") continue;  // list of completed bookings, not a slot
        put_slot(state, domain + "-book" + slot, annotation_value(v));
      }
    }
  }
  return state;
}

Dialogue map_classic_dialogue(const std::string& id, const ordered_json& entry,
                              Dataset dataset, Split split,
                              std::size_t* trailing_user_turns) {
  if (!entry.contains("log") || !entry["log"].is_array())
    throw std::runtime_error("no log array");
  const auto& log = entry["log"];
  // log alternates user, system, user, system, ...; the system turn following
  // a user turn carries the state reached by that user turn.
  std::size_t pairs = log.size() / 2;
  if (log.size() % 2 != 0 && trailing_user_turns) *trailing_user_turns += 1;
  if (pairs == 0) throw std::runtime_error("no complete turns");

  Dialogue d{id, dataset, split, {}};
  for (std::size_t t = 0; t < pairs; ++t) {
    const auto& user = log[2 * t];
    const auto& system = log[2 * t + 1];
    Turn turn;
    turn.index = static_cast<int>(t) + 1;
    turn.user_utterance = {Speaker::user,
                           norm_utterance(user.value("text", std::string()))};
    if (t > 0) {
      const auto& prev_system = log[2 * t - 1];
      turn.agent_utterance =
          Utterance{Speaker::agent,
                    norm_utterance(prev_system.value("text", std::string()))};
    }
    turn.gold_state = state_from_metadata(system.value("metadata", ordered_json()));
    d.turns.push_back(std::move(turn));
  }
  return d;
}

std::vector<Dialogue> ingest_classic(const fs::path& raw_dir, Dataset dataset,
                                     Split split, Accumulator& acc) {
  ordered_json data = load_json_file(raw_dir / "data.json");
  std::set<std::string> val_ids = read_id_list(find_id_list(raw_dir, "valListFile"));
  std::set<std::string> test_ids = read_id_list(find_id_list(raw_dir, "testListFile"));

  std::size_t trailing_user_turns = 0;
  for (const auto& [id, entry] : data.items()) {
    Split member = test_ids.count(id)  ? Split::test
                   : val_ids.count(id) ? Split::dev
                                       : Split::train;
    if (member != split) continue;
    try {
      acc.accept(map_classic_dialogue(id, entry, dataset, split,
                                      &trailing_user_turns));
    } catch (const std::exception& e) {
      acc.skip(id, e.what());
    }
  }
  if (trailing_user_turns > 0 && acc.report) {
    acc.report->notes.push_back(
        std::to_string(trailing_user_turns) +
        " dialogue(s) had a trailing user turn with no system annotation; "
        "that turn was dropped");
  }
  return std::move(acc.out);
}

// --- MultiWOZ 2.2: schema-guided layout, dialogues_*.json per split dir ----

Dialogue map_schema_dialogue(const ordered_json& src, Split split) {
  std::string id = src.value("dialogue_id", std::string());
  if (id.empty()) throw std::runtime_error("no dialogue_id");
  if (!src.contains("turns") || !src["turns"].is_array())
    throw std::runtime_error("no turns array");

  Dialogue d{id, Dataset::multiwoz22, split, {}};
  std::optional<std::string> pending_agent;
  for (const auto& turn : src["turns"]) {
    std::string speaker = turn.value("speaker", std::string());
    std::string text = norm_utterance(turn.value("utterance", std::string()));
    if (speaker == "SYSTEM") {
      pending_agent = text;
      continue;
    }
    if (speaker != "USER")
      throw std::runtime_error("unknown speaker: " + speaker);

    Turn t;
    t.index = static_cast<int>(d.turns.size()) + 1;
    t.user_utterance = {Speaker::user, text};
    if (t.index == 1) {
      if (pending_agent.has_value())
        throw std::runtime_error("agent utterance before the first user turn");
    } else {
      if (!pending_agent.has_value())
        throw std::runtime_error("consecutive user turns");
      t.agent_utterance = Utterance{Speaker::agent, *pending_agent};
    }
    pending_agent.reset();

    // State lives on the user turn's frames, one frame per service. Lists
    // hold alternative annotations; the first value is taken.
    if (turn.contains("frames") && turn["frames"].is_array()) {
      for (const auto& frame : turn["frames"]) {
        if (!frame.contains("state")) continue;
        const auto& st = frame["state"];
        if (!st.contains("slot_values") || !st["slot_values"].is_object()) continue;
        for (const auto& [slot, values] : st["slot_values"].items())
          put_slot(t.gold_state, slot, annotation_value(values));
      }
    }
    d.turns.push_back(std::move(t));
  }
  return d;
}

std::vector<Dialogue> ingest_multiwoz22(const fs::path& raw_dir, Split split,
                                        Accumulator& acc) {
  fs::path split_dir = raw_dir / to_string(split);
  if (!fs::exists(split_dir))
    throw std::runtime_error("missing file: " + split_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(split_dir)) {
    std::string name = entry.path().filename().string();
    if (name.rfind("dialogues_", 0) == 0 && entry.path().extension() == ".json")
      files.push_back(entry.path());
  }
  if (files.empty())
    throw std::runtime_error("missing file: no dialogues_*.json under " +
                             split_dir.string());
  std::sort(files.begin(), files.end());

  for (const auto& file : files) {
    ordered_json arr = load_json_file(file);
    if (!arr.is_array())
      throw std::runtime_error("malformed JSON: " + file.string() +
                               " (expected an array)");
    for (const auto& src : arr) {
      std::string id = src.is_object() ? src.value("dialogue_id", std::string()) : "";
      try {
        acc.accept(map_schema_dialogue(src, split));
      } catch (const std::exception& e) {
        acc.skip(id.empty() ? "<unknown>" : id, e.what());
      }
    }
  }
  if (acc.report) {
    acc.report->notes.push_back(
        "multiwoz22: first listed value taken for multi-value slot annotations");
  }
  return std::move(acc.out);
}

// --- WOZ 2.0: woz_{train,validate,test}_en.json ----------------------------

Dialogue map_woz_dialogue(const ordered_json& src, Split split) {
  if (!src.contains("dialogue") || !src["dialogue"].is_array())
    throw std::runtime_error("no dialogue array");
  std::string id = src.contains("dialogue_idx")
                       ? std::to_string(src["dialogue_idx"].get<long long>())
                       : "";
  if (id.empty()) throw std::runtime_error("no dialogue_idx");

  Dialogue d{id, Dataset::woz20, split, {}};
  BeliefState running;  // inform acts accumulate; slots are never deleted
  for (const auto& turn : src["dialogue"]) {
    Turn t;
    t.index = static_cast<int>(d.turns.size()) + 1;
    t.user_utterance = {Speaker::user,
                        norm_utterance(turn.value("transcript", std::string()))};
    std::string agent = norm_utterance(turn.value("system_transcript", std::string()));
    if (t.index == 1) {
      if (!agent.empty())
        throw std::runtime_error("agent utterance before the first user turn");
    } else {
      if (agent.empty()) throw std::runtime_error("empty system transcript");
      t.agent_utterance = Utterance{Speaker::agent, agent};
    }
    if (turn.contains("belief_state") && turn["belief_state"].is_array()) {
      for (const auto& act : turn["belief_state"]) {
        if (act.value("act", std::string()) != "inform") continue;
        if (!act.contains("slots") || !act["slots"].is_array()) continue;
        for (const auto& pair : act["slots"]) {
          if (!pair.is_array() || pair.size() < 2) continue;
          put_slot(running, annotation_value(pair[0]), annotation_value(pair[1]));
        }
      }
    }
    t.gold_state = running;
    d.turns.push_back(std::move(t));
  }
  return d;
}

std::vector<Dialogue> ingest_woz20(const fs::path& raw_dir, Split split,
                                   Accumulator& acc) {
  const char* name = split == Split::train  ? "woz_train_en.json"
                     : split == Split::dev ? "woz_validate_en.json"
                                           : "woz_test_en.json";
  ordered_json arr = load_json_file(raw_dir / name);
  if (!arr.is_array())
    throw std::runtime_error("malformed JSON: " + (raw_dir / name).string() +
                             " (expected an array)");
  for (const auto& src : arr) {
    std::string id = src.is_object() && src.contains("dialogue_idx")
                         ? std::to_string(src["dialogue_idx"].get<long long>())
                         : "<unknown>";
    try {
      acc.accept(map_woz_dialogue(src, split));
    } catch (const std::exception& e) {
      acc.skip(id, e.what());
    }
  }
  return std::move(acc.out);
}

// --- DSTC2: per-call directories with log.json / label.json ----------------

Dialogue map_dstc2_call(const fs::path& call_dir, Split split,
                        bool use_transcriptions) {
  ordered_json log = load_json_file(call_dir / "log.json");
  ordered_json label = load_json_file(call_dir / "label.json");
  std::string id = log.value("session-id", std::string());
  if (id.empty()) id = call_dir.filename().string();

  if (!log.contains("turns") || !log["turns"].is_array() ||
      !label.contains("turns") || !label["turns"].is_array())
    throw std::runtime_error("no turns array");
  const auto& log_turns = log["turns"];
  const auto& label_turns = label["turns"];
  if (log_turns.size() != label_turns.size())
    throw std::runtime_error("log/label turn count mismatch");
  if (log_turns.empty()) throw std::runtime_error("no turns");

  Dialogue d{id, Dataset::dstc2, split, {}};
  BeliefState running;  // goal labels accumulate across turns
  for (std::size_t i = 0; i < log_turns.size(); ++i) {
    Turn t;
    t.index = static_cast<int>(i) + 1;

    std::string user;
    if (use_transcriptions) {
      user = label_turns[i].value("transcription", std::string());
    } else {
      // Only the 1-best recognition hypothesis is used.
      const auto& input = log_turns[i].value("input", ordered_json());
      const auto& live = input.is_object() ? input.value("live", ordered_json())
                                           : ordered_json();
      if (live.is_object() && live.contains("asr-hyps") &&
          live["asr-hyps"].is_array() && !live["asr-hyps"].empty())
        user = live["asr-hyps"][0].value("asr-hyp", std::string());
    }
    t.user_utterance = {Speaker::user, norm_utterance(user)};

    // The machine speaks first in each exchange; its opening greeting
    // precedes any user turn and has no slot content, so turn 1 carries no
    // agent utterance.
    if (i > 0) {
      const auto& output = log_turns[i].value("output", ordered_json());
      std::string agent =
          output.is_object() ? output.value("transcript", std::string()) : "";
      t.agent_utterance = Utterance{Speaker::agent, norm_utterance(agent)};
    }

    const auto& goals = label_turns[i].value("goal-labels", ordered_json());
    if (goals.is_object()) {
      for (const auto& [slot, v] : goals.items())
        put_slot(running, slot, annotation_value(v));
    }
    t.gold_state = running;
    d.turns.push_back(std::move(t));
  }
  return d;
}

std::vector<Dialogue> ingest_dstc2(const fs::path& raw_dir, Split split,
                                   Accumulator& acc, const IngestOptions& options) {
  std::vector<fs::path> calls;
  for (const auto& entry : fs::recursive_directory_iterator(raw_dir)) {
    if (!entry.is_directory()) continue;
    if (fs::exists(entry.path() / "log.json") &&
        fs::exists(entry.path() / "label.json"))
      calls.push_back(entry.path());
  }
  if (calls.empty())
    throw std::runtime_error(
        "missing file: no call directories with log.json/label.json under " +
        raw_dir.string());
  std::sort(calls.begin(), calls.end());

  for (const auto& call : calls) {
    try {
      acc.accept(map_dstc2_call(call, split, options.dstc2_transcriptions));
    } catch (const std::exception& e) {
      acc.skip(call.filename().string(), e.what());
    }
  }
  if (acc.report) {
    acc.report->notes.push_back(
        options.dstc2_transcriptions
            ? "dstc2: user side read from transcriptions"
            : "dstc2: user side read from the 1-best ASR hypothesis");
  }
  return std::move(acc.out);
}

}  // namespace

std::vector<Dialogue> ingest(Dataset dataset, const fs::path& raw_dir, Split split,
                             IngestReport* report, const IngestOptions& options) {
  if (!fs::exists(raw_dir))
    throw std::runtime_error("missing file: " + raw_dir.string());
  if (report) {
    *report = IngestReport{};
    report->dataset = dataset;
    report->split = split;
  }
  Accumulator acc{dataset, split, report, {}};
  switch (dataset) {
    case Dataset::multiwoz21:
    case Dataset::multiwoz23:
    case Dataset::multiwoz24:
      return ingest_classic(raw_dir, dataset, split, acc);
    case Dataset::multiwoz22:
      return ingest_multiwoz22(raw_dir, split, acc);
    case Dataset::woz20:
      return ingest_woz20(raw_dir, split, acc);
    case Dataset::dstc2:
      return ingest_dstc2(raw_dir, split, acc, options);
  }
  throw std::runtime_error("unreachable dataset");
}

void write_normalized(const std::vector<Dialogue>& dialogues,
                      const std::filesystem::path& out) {
  std::ofstream os = open_output(out);
  for (const Dialogue& d : dialogues) {
    ordered_json j;
    j["id"] = d.id;
    j["dataset"] = to_string(d.dataset);
    j["split"] = to_string(d.split);
    ordered_json turns = ordered_json::array();
    for (const Turn& t : d.turns) {
      ordered_json jt;
      jt["index"] = t.index;
      if (t.agent_utterance)
        jt["agent"] = t.agent_utterance->text;
      else
        jt["agent"] = nullptr;
      jt["user"] = t.user_utterance.text;
      ordered_json state = ordered_json::object();
      for (const auto& [slot, value] : t.gold_state) state[slot] = value;
      jt["state"] = std::move(state);
      turns.push_back(std::move(jt));
    }
    j["turns"] = std::move(turns);
    os << j.dump() << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + out.string());
}

std::vector<Dialogue> read_normalized(const std::filesystem::path& path) {
  std::vector<Dialogue> dialogues;
  for_each_jsonl(path, [&](std::size_t lineno, const ordered_json& j) {
    try {
      Dialogue d;
      d.id = j.at("id").get<std::string>();
      d.dataset = dataset_from_string(j.at("dataset").get<std::string>());
      d.split = split_from_string(j.at("split").get<std::string>());
      for (const auto& jt : j.at("turns")) {
        Turn t;
        t.index = jt.at("index").get<int>();
        if (!jt.at("agent").is_null())
          t.agent_utterance =
              Utterance{Speaker::agent, jt.at("agent").get<std::string>()};
        t.user_utterance = {Speaker::user, jt.at("user").get<std::string>()};
        for (const auto& [slot, value] : jt.at("state").items())
          t.gold_state[slot] = value.get<std::string>();
        d.turns.push_back(std::move(t));
      }
      check_invariants(d);
      dialogues.push_back(std::move(d));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": " + e.what());
    }
  });
  return dialogues;
}

}  // namespace dst
