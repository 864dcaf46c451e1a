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

#ifndef DSTKIT_ANALYSIS_HPP_
#define DSTKIT_ANALYSIS_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dstkit/driver.hpp"

namespace dst {

struct PropagationStats {
  // First incorrect turn index -> number of dialogues; mass equals the
  // count of dialogues with at least one error.
  std::map<int, std::size_t> first_error_turn_histogram;
  // Fraction of turns after a dialogue's first error (first error turn
  // excluded) that are correct. Absent when no dialogue has an error or no
  // turns follow one.
  std::optional<double> post_error_recovery_rate;
  // Mean length of the maximal incorrect run starting at the first error,
  // over dialogues with at least one error. Absent when none do.
  std::optional<double> consecutive_error_run_mean;
};

struct PerTurnJga {
  int turn_index = 0;
  std::size_t count = 0;
  double jga = 0.0;
};

struct RunReport {
  std::string run_id;
  std::string dataset;  // provenance; empty when unknown
  std::string mode;     // "full" or "recurrent"; empty when unknown
  int n_recent_turns = 0;
  std::string carry;    // "predicted"/"oracle"; empty for full mode
  double jga = 0.0;
  double slot_accuracy = 0.0;
  std::size_t turn_count = 0;
  std::size_t dialogue_count = 0;
  PropagationStats propagation;
  std::vector<PerTurnJga> per_turn_jga;
};

// Fraction of turns whose whole predicted state exactly matches gold.
// Throws on an empty prediction list.
double jga(const std::vector<TurnPrediction>& predictions);

// Micro-averaged per-slot correctness over the union of gold and predicted
// slots per turn; a slot missing on one side counts wrong once. Turns where
// both states are empty contribute nothing. 1.0 when there are no slot
// decisions at all (vacuously perfect, keeps jga=1 <=> slot_accuracy=1).
double slot_accuracy(const std::vector<TurnPrediction>& predictions);

// Groups predictions by dialogue (turn-ordered) and derives the first-error
// histogram, post-error recovery rate and consecutive-error run mean.
PropagationStats propagation_stats(const std::vector<TurnPrediction>& predictions);

struct RunProvenance {
  std::string run_id;
  std::string dataset;
  std::string mode;
  int n_recent_turns = 0;
  std::string carry;
};

RunReport make_run_report(const std::vector<TurnPrediction>& predictions,
                          const RunProvenance& provenance);

// Aligned comparison across runs, one data row per report; datasets are
// never merged, a mismatch is only flagged. CSV renders percentages to one
// decimal; JSON carries full precision. Throws on an empty report list.
std::string compare_runs_csv(const std::vector<RunReport>& reports);
std::string compare_runs_json(const std::vector<RunReport>& reports);

std::string run_report_json(const RunReport& report);
std::string run_report_csv(const RunReport& report);
RunReport run_report_from_json(const std::string& text);

}  // namespace dst

#endif  // DSTKIT_ANALYSIS_HPP_
