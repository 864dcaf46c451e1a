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

#include "dstkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dstkit/jsonl.hpp"

namespace dst {

namespace {

// Stable regrouping by dialogue id (first-appearance order), turns ascending
// within each dialogue.
std::vector<std::vector<const TurnPrediction*>> group_by_dialogue(
    const std::vector<TurnPrediction>& predictions) {
  std::vector<std::vector<const TurnPrediction*>> groups;
  std::map<std::string, std::size_t> index;
  for (const TurnPrediction& p : predictions) {
    auto [it, inserted] = index.emplace(p.dialogue_id, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(&p);
  }
  for (auto& g : groups) {
    std::sort(g.begin(), g.end(), [](const TurnPrediction* a, const TurnPrediction* b) {
      return a->turn_index < b->turn_index;
    });
  }
  return groups;
}

std::string percent_1dp(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
  return buf;
}

void propagation_to_json(const PropagationStats& s, ordered_json& j) {
  ordered_json hist = ordered_json::object();
  for (const auto& [turn, count] : s.first_error_turn_histogram)
    hist[std::to_string(turn)] = count;
  j["first_error_turn_histogram"] = std::move(hist);
  // Absent rates serialize as null, never as NaN.
  j["post_error_recovery_rate"] =
      s.post_error_recovery_rate ? ordered_json(*s.post_error_recovery_rate)
                                 : ordered_json(nullptr);
  j["consecutive_error_run_mean"] =
      s.consecutive_error_run_mean ? ordered_json(*s.consecutive_error_run_mean)
                                   : ordered_json(nullptr);
}

}  // namespace

double jga(const std::vector<TurnPrediction>& predictions) {
  if (predictions.empty()) throw std::invalid_argument("no predictions");
  std::size_t correct = std::count_if(predictions.begin(), predictions.end(),
                                      [](const TurnPrediction& p) { return p.correct; });
  return static_cast<double>(correct) / predictions.size();
}

double slot_accuracy(const std::vector<TurnPrediction>& predictions) {
  if (predictions.empty()) throw std::invalid_argument("no predictions");
  std::size_t decisions = 0;
  std::size_t correct = 0;
  for (const TurnPrediction& p : predictions) {
    BeliefState gold = canonicalize(p.gold_state);
    BeliefState pred = canonicalize(p.parsed_state);
    std::set<std::string> slots;
    for (const auto& [slot, _] : gold) slots.insert(slot);
    for (const auto& [slot, _] : pred) slots.insert(slot);
    for (const std::string& slot : slots) {
      ++decisions;
      auto g = gold.find(slot);
      auto q = pred.find(slot);
      if (g != gold.end() && q != pred.end() && g->second == q->second) ++correct;
    }
  }
  // No slot decisions at all (every turn empty on both sides) is vacuously
  // perfect; this keeps jga = 1 <=> slot_accuracy = 1.
  if (decisions == 0) return 1.0;
  return static_cast<double>(correct) / decisions;
}

PropagationStats propagation_stats(const std::vector<TurnPrediction>& predictions) {
  PropagationStats stats;
  std::size_t turns_after_first_error = 0;
  std::size_t correct_after_first_error = 0;
  std::size_t run_length_total = 0;
  std::size_t dialogues_with_errors = 0;

  for (const auto& dialogue : group_by_dialogue(predictions)) {
    std::size_t first_error = dialogue.size();
    for (std::size_t i = 0; i < dialogue.size(); ++i) {
      if (!dialogue[i]->correct) {
        first_error = i;
        break;
      }
    }
    if (first_error == dialogue.size()) continue;  // error-free dialogue

    ++dialogues_with_errors;
    stats.first_error_turn_histogram[dialogue[first_error]->turn_index] += 1;

    // Recovery: turns strictly after the first error.
    for (std::size_t i = first_error + 1; i < dialogue.size(); ++i) {
      ++turns_after_first_error;
      if (dialogue[i]->correct) ++correct_after_first_error;
    }
    // Maximal incorrect run starting at the first error.
    std::size_t run = 0;
    for (std::size_t i = first_error; i < dialogue.size() && !dialogue[i]->correct; ++i)
      ++run;
    run_length_total += run;
  }

  if (turns_after_first_error > 0)
    stats.post_error_recovery_rate =
        static_cast<double>(correct_after_first_error) / turns_after_first_error;
  if (dialogues_with_errors > 0)
    stats.consecutive_error_run_mean =
        static_cast<double>(run_length_total) / dialogues_with_errors;
  return stats;
}

RunReport make_run_report(const std::vector<TurnPrediction>& predictions,
                          const RunProvenance& provenance) {
  RunReport report;
  report.run_id = provenance.run_id;
  report.dataset = provenance.dataset;
  report.mode = provenance.mode;
  report.n_recent_turns = provenance.n_recent_turns;
  report.carry = provenance.carry;
  report.jga = jga(predictions);
  report.slot_accuracy = slot_accuracy(predictions);
  report.turn_count = predictions.size();
  report.dialogue_count = group_by_dialogue(predictions).size();
  report.propagation = propagation_stats(predictions);

  std::map<int, std::pair<std::size_t, std::size_t>> by_turn;  // correct, total
  for (const TurnPrediction& p : predictions) {
    auto& [correct, total] = by_turn[p.turn_index];
    if (p.correct) ++correct;
    ++total;
  }
  for (const auto& [turn, counts] : by_turn) {
    report.per_turn_jga.push_back(
        {turn, counts.second,
         static_cast<double>(counts.first) / counts.second});
  }
  return report;
}

std::string run_report_json(const RunReport& r) {
  ordered_json j;
  j["run_id"] = r.run_id;
  j["dataset"] = r.dataset;
  j["mode"] = r.mode;
  j["n_recent_turns"] = r.n_recent_turns;
  j["carry"] = r.carry;
  j["jga"] = r.jga;
  j["slot_accuracy"] = r.slot_accuracy;
  j["turn_count"] = r.turn_count;
  j["dialogue_count"] = r.dialogue_count;
  ordered_json prop;
  propagation_to_json(r.propagation, prop);
  j["propagation"] = std::move(prop);
  ordered_json per_turn = ordered_json::array();
  for (const PerTurnJga& t : r.per_turn_jga) {
    ordered_json jt;
    jt["turn"] = t.turn_index;
    jt["count"] = t.count;
    jt["jga"] = t.jga;
    per_turn.push_back(std::move(jt));
  }
  j["per_turn_jga"] = std::move(per_turn);
  return j.dump(2) + "\n";
}

RunReport run_report_from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  RunReport r;
  r.run_id = j.value("run_id", std::string());
  r.dataset = j.value("dataset", std::string());
  r.mode = j.value("mode", std::string());
  r.n_recent_turns = j.value("n_recent_turns", 0);
  r.carry = j.value("carry", std::string());
  r.jga = j.at("jga").get<double>();
  r.slot_accuracy = j.at("slot_accuracy").get<double>();
  r.turn_count = j.at("turn_count").get<std::size_t>();
  r.dialogue_count = j.at("dialogue_count").get<std::size_t>();
  if (j.contains("propagation")) {
    const auto& p = j["propagation"];
    for (const auto& [turn, count] : p.value("first_error_turn_histogram",
                                             ordered_json::object()).items())
      r.propagation.first_error_turn_histogram[std::stoi(turn)] =
          count.get<std::size_t>();
    if (p.contains("post_error_recovery_rate") &&
        !p["post_error_recovery_rate"].is_null())
      r.propagation.post_error_recovery_rate =
          p["post_error_recovery_rate"].get<double>();
    if (p.contains("consecutive_error_run_mean") &&
        !p["consecutive_error_run_mean"].is_null())
      r.propagation.consecutive_error_run_mean =
          p["consecutive_error_run_mean"].get<double>();
  }
  for (const auto& jt : j.value("per_turn_jga", ordered_json::array())) {
    r.per_turn_jga.push_back({jt.at("turn").get<int>(),
                              jt.at("count").get<std::size_t>(),
                              jt.at("jga").get<double>()});
  }
  return r;
}

namespace {

const char* kCompareHeader =
    "run_id,dataset,mode,n,carry,jga_pct,slot_accuracy_pct,turns,dialogues\n";

std::string compare_row(const RunReport& r) {
  std::ostringstream row;
  row << r.run_id << "," << r.dataset << "," << r.mode << ",";
  if (r.mode == "recurrent") row << r.n_recent_turns;
  row << "," << r.carry << "," << percent_1dp(r.jga) << ","
      << percent_1dp(r.slot_accuracy) << "," << r.turn_count << ","
      << r.dialogue_count << "\n";
  return row.str();
}

}  // namespace

std::string run_report_csv(const RunReport& r) {
  return std::string(kCompareHeader) + compare_row(r);
}

std::string compare_runs_csv(const std::vector<RunReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("no reports");
  std::string out = kCompareHeader;
  for (const RunReport& r : reports) out += compare_row(r);
  return out;
}

std::string compare_runs_json(const std::vector<RunReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("no reports");
  std::set<std::string> datasets;
  for (const RunReport& r : reports) datasets.insert(r.dataset);

  ordered_json j;
  j["datasets_mismatch"] = datasets.size() > 1;
  ordered_json rows = ordered_json::array();
  for (const RunReport& r : reports) {
    ordered_json row;
    row["run_id"] = r.run_id;
    row["dataset"] = r.dataset;
    row["mode"] = r.mode;
    row["n_recent_turns"] = r.n_recent_turns;
    row["carry"] = r.carry;
    row["jga"] = r.jga;
    row["slot_accuracy"] = r.slot_accuracy;
    row["turn_count"] = r.turn_count;
    row["dialogue_count"] = r.dialogue_count;
    rows.push_back(std::move(row));
  }
  j["runs"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace dst
