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

#ifndef DSTKIT_DRIVER_HPP_
#define DSTKIT_DRIVER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dstkit/corpus.hpp"

namespace dst {

enum class Transport { subprocess, http };

// Any process honoring the wire protocol: one {"id","input"} JSON object per
// line in, one {"id","output"} per line out, ids opaque and echoed, output
// flushed per line. Over HTTP the same objects go through POST /predict.
struct PredictorEndpoint {
  Transport transport = Transport::subprocess;
  std::string address;  // command line, or http://host:port
  double timeout_seconds = 30.0;
  int max_retries = 2;
};

// "http://..." / "https://..." selects the http transport; an optional
// "subprocess:" prefix (or none) selects the subprocess transport.
PredictorEndpoint parse_endpoint(const std::string& spec);

struct TurnPrediction {
  std::string dialogue_id;
  int turn_index = 0;
  std::string input_text;  // as sent
  std::string raw_output;
  BeliefState parsed_state;
  BeliefState gold_state;
  bool correct = false;  // states_equal(parsed_state, gold_state)
  bool errored = false;  // transport failure after retries
};

class PredictorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Predictor {
 public:
  virtual ~Predictor() = default;
  // Returns the raw output text for one input or throws PredictorError.
  virtual std::string predict(const std::string& id, const std::string& input) = 0;
};

using PredictorFactory = std::function<std::unique_ptr<Predictor>()>;

// Opens one transport connection per call; parallel drives create one per
// worker.
PredictorFactory endpoint_factory(const PredictorEndpoint& endpoint);

struct DriveOptions {
  int parallel = 1;  // bound on concurrently processed dialogues
};

enum class CarrySource { predicted, oracle };

// One independent request per (dialogue, turn) in full-history form. Results
// come back in (dialogue, turn) order regardless of dispatch. A turn that
// still fails after retries is marked errored and counted incorrect.
std::vector<TurnPrediction> drive_full(const std::vector<Dialogue>& dialogues,
                                       const PredictorFactory& factory,
                                       const DriveOptions& options = {});

// Processes each dialogue's turns strictly in order. The carry state for
// turn T is the parsed prediction at turn T-N (predicted) or the gold state
// at T-N (oracle); turns with T <= N use the empty carry state. An errored
// turn carries an empty state forward.
std::vector<TurnPrediction> drive_recurrent(const std::vector<Dialogue>& dialogues,
                                            const PredictorFactory& factory,
                                            int n_recent_turns, CarrySource carry,
                                            const DriveOptions& options = {});

// ---------------------------------------------------------------------------
// Mock predictors. They answer from a serialized corpus (the answer key) and
// rely on the driver's request-id convention "<dialogue_id>#<turn_index>".

enum class MockKind { gold_echo, empty, noisy_gold, state_carry };

std::string to_string(MockKind k);
MockKind mock_kind_from_string(const std::string& s);

struct MockParams {
  std::vector<int> corrupt_turns;  // noisy_gold: turn indices to corrupt
  int fail_turn = 1;               // state_carry: the one turn answered wrong
  int n_recent_turns = 1;          // state_carry: window used for gold deltas
  std::uint32_t seed = 0;
};

// Gold targets keyed by (dialogue id, turn index), loaded from the JSONL
// written by emit_corpus / `dst serialize`.
struct AnswerKey {
  std::map<std::pair<std::string, int>, std::string> targets;

  static AnswerKey load(const std::filesystem::path& serialized_jsonl);
};

// In-process mock for tests; same behavior as the wire-protocol one.
std::unique_ptr<Predictor> make_mock(MockKind kind, const MockParams& params,
                                     AnswerKey key);

// Endpoint that spawns `<dst_binary> mock-predictor ...` over the subprocess
// transport.
PredictorEndpoint mock_predictor(MockKind kind, const MockParams& params,
                                 const std::filesystem::path& dst_binary,
                                 const std::filesystem::path& answer_key_jsonl);

// Serving loop behind `dst mock-predictor`: reads {"id","input"} lines,
// writes {"id","output"} lines, flushing each. Returns a process exit code.
int run_mock_predictor_loop(MockKind kind, const MockParams& params,
                            const AnswerKey& key, std::istream& in,
                            std::ostream& out);

// Prediction records as JSONL, one object per turn:
//   {"id","turn","input","raw_output","predicted","gold","correct","errored"}
void write_predictions(const std::vector<TurnPrediction>& predictions,
                       const std::filesystem::path& out);
std::vector<TurnPrediction> read_predictions(const std::filesystem::path& path);

}  // namespace dst

#endif  // DSTKIT_DRIVER_HPP_
