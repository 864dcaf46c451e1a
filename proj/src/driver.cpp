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

#include "dstkit/driver.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "dstkit/jsonl.hpp"
#include "dstkit/serialize.hpp"
#include "dstkit/text.hpp"

namespace dst {

namespace {

using Clock = std::chrono::steady_clock;

std::string request_json(const std::string& id, const std::string& input) {
  ordered_json j;
  j["id"] = id;
  j["input"] = input;
  return j.dump();
}

// Parses a {"id","output"} response line; throws PredictorError on anything
// else or on an id mismatch.
std::string parse_response(const std::string& line, const std::string& expect_id) {
  ordered_json j = ordered_json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("output"))
    throw PredictorError("malformed predictor response: " + line);
  if (j["id"].get<std::string>() != expect_id)
    throw PredictorError("predictor echoed wrong id: expected " + expect_id);
  return j["output"].get<std::string>();
}

void backoff_sleep(int attempt) {
  int ms = 50 << std::min(attempt, 6);
  std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

// ---------------------------------------------------------------------------
// Subprocess transport: the predictor is a child process speaking one JSON
// object per line on stdin/stdout. One request is in flight at a time, so
// the line protocol cannot deadlock on pipe buffers.

class SubprocessPredictor final : public Predictor {
 public:
  SubprocessPredictor(std::string command, double timeout_seconds, int max_retries)
      : command_(std::move(command)),
        timeout_ms_(static_cast<int>(timeout_seconds * 1000.0)),
        max_retries_(max_retries) {
    if (timeout_ms_ <= 0) throw std::invalid_argument("timeout must be > 0");
    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });
  }

  ~SubprocessPredictor() override { shutdown(); }

  std::string predict(const std::string& id, const std::string& input) override {
    const std::string payload = request_json(id, input) + "\n";
    std::string last_error;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
      if (attempt > 0) backoff_sleep(attempt - 1);
      try {
        ensure_child();
        write_all(payload);
        return parse_response(read_line(), id);
      } catch (const std::exception& e) {
        last_error = e.what();
        shutdown();  // a fresh child for the next attempt
      }
    }
    throw PredictorError("subprocess predictor failed after " +
                         std::to_string(max_retries_ + 1) + " attempt(s): " +
                         last_error);
  }

 private:
  void ensure_child() {
    if (pid_ > 0) return;
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw PredictorError("pipe() failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw PredictorError("pipe() failed");
    }
    pid_t pid = ::fork();
    if (pid < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]})
        ::close(fd);
      throw PredictorError("fork() failed");
    }
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]})
        ::close(fd);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), (char*)nullptr);
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    pid_ = pid;
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    buf_.clear();
  }

  void shutdown() {
    if (in_fd_ >= 0) ::close(in_fd_);
    if (out_fd_ >= 0) ::close(out_fd_);
    in_fd_ = out_fd_ = -1;
    if (pid_ > 0) {
      // Closing stdin asks the child to exit; escalate if it lingers.
      int status = 0;
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) != 0) {
          pid_ = -1;
          return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  void write_all(const std::string& data) {
    std::size_t written = 0;
    while (written < data.size()) {
      ssize_t n = ::write(in_fd_, data.data() + written, data.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw PredictorError("write to predictor failed");
      }
      written += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms_);
    while (true) {
      std::size_t nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return line;
      }
      auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                           deadline - Clock::now())
                           .count();
      if (remaining <= 0) throw PredictorError("predictor timed out");
      struct pollfd pfd{out_fd_, POLLIN, 0};
      int rc = ::poll(&pfd, 1, static_cast<int>(remaining));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw PredictorError("poll failed");
      }
      if (rc == 0) throw PredictorError("predictor timed out");
      char chunk[4096];
      ssize_t n = ::read(out_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw PredictorError("read from predictor failed");
      }
      if (n == 0) throw PredictorError("predictor closed its output");
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::string command_;
  int timeout_ms_;
  int max_retries_;
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buf_;
};

// ---------------------------------------------------------------------------
// HTTP transport: POST /predict; 5xx and transport errors are retried,
// other non-200 statuses fail immediately.

class HttpPredictor final : public Predictor {
 public:
  HttpPredictor(const std::string& address, double timeout_seconds, int max_retries)
      : client_(address), max_retries_(max_retries) {
    auto secs = std::chrono::duration<double>(timeout_seconds);
    client_.set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(secs));
    client_.set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(secs));
    client_.set_write_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(secs));
  }

  std::string predict(const std::string& id, const std::string& input) override {
    std::string last_error;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
      if (attempt > 0) backoff_sleep(attempt - 1);
      httplib::Result res =
          client_.Post("/predict", request_json(id, input), "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "server error: status " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw PredictorError("predictor rejected request: status " +
                             std::to_string(res->status));
      return parse_response(res->body, id);
    }
    throw PredictorError("http predictor failed after " +
                         std::to_string(max_retries_ + 1) + " attempt(s): " +
                         last_error);
  }

 private:
  httplib::Client client_;
  int max_retries_;
};

// ---------------------------------------------------------------------------

struct DriveMode {
  ContextMode context = ContextMode::full_history;
  int n_recent_turns = 1;
  CarrySource carry = CarrySource::predicted;
};

std::string request_id(const std::string& dialogue_id, int turn_index) {
  return dialogue_id + "#" + std::to_string(turn_index);
}

std::vector<TurnPrediction> drive_one_dialogue(const Dialogue& d,
                                               Predictor& predictor,
                                               const DriveMode& mode) {
  std::vector<TurnPrediction> out;
  // Parsed predictions by turn index; an errored turn leaves an empty state,
  // which is what gets carried forward.
  std::vector<BeliefState> predicted(d.turns.size() + 1);

  for (const Turn& turn : d.turns) {
    SerializedExample ex;
    if (mode.context == ContextMode::full_history) {
      ex = serialize_full(d, turn.index);
    } else {
      BeliefState carry;
      int carry_turn = turn.index - mode.n_recent_turns;
      if (carry_turn >= 1) {
        carry = mode.carry == CarrySource::oracle
                    ? d.turns[carry_turn - 1].gold_state
                    : predicted[carry_turn];
      }
      ex = serialize_recurrent(d, turn.index, mode.n_recent_turns, carry);
    }

    TurnPrediction p;
    p.dialogue_id = d.id;
    p.turn_index = turn.index;
    p.input_text = ex.input_text;
    p.gold_state = turn.gold_state;
    try {
      p.raw_output = predictor.predict(request_id(d.id, turn.index), ex.input_text);
      p.parsed_state = parse_state(p.raw_output).state;
    } catch (const PredictorError& e) {
      p.errored = true;
      p.raw_output.clear();
      p.parsed_state.clear();
    }
    p.correct = states_equal(p.parsed_state, p.gold_state);
    predicted[turn.index] = p.parsed_state;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<TurnPrediction> drive(const std::vector<Dialogue>& dialogues,
                                  const PredictorFactory& factory,
                                  const DriveMode& mode, const DriveOptions& options) {
  std::vector<std::vector<TurnPrediction>> per_dialogue(dialogues.size());
  int workers = std::max(1, options.parallel);
  workers = static_cast<int>(
      std::min<std::size_t>(workers, std::max<std::size_t>(dialogues.size(), 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto run_worker = [&] {
    try {
      std::unique_ptr<Predictor> predictor = factory();
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= dialogues.size()) break;
        per_dialogue[i] = drive_one_dialogue(dialogues[i], *predictor, mode);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  if (workers == 1) {
    run_worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int i = 0; i < workers; ++i) threads.emplace_back(run_worker);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // Assembly in (dialogue, turn) order regardless of scheduling.
  std::vector<TurnPrediction> out;
  for (auto& preds : per_dialogue)
    for (auto& p : preds) out.push_back(std::move(p));
  return out;
}

}  // namespace

PredictorEndpoint parse_endpoint(const std::string& spec) {
  PredictorEndpoint ep;
  if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
    ep.transport = Transport::http;
    ep.address = spec;
  } else if (spec.rfind("subprocess:", 0) == 0) {
    ep.transport = Transport::subprocess;
    ep.address = spec.substr(std::string("subprocess:").size());
  } else {
    ep.transport = Transport::subprocess;
    ep.address = spec;
  }
  if (trim(ep.address).empty()) throw std::runtime_error("empty endpoint address");
  return ep;
}

PredictorFactory endpoint_factory(const PredictorEndpoint& endpoint) {
  return [endpoint]() -> std::unique_ptr<Predictor> {
    if (endpoint.transport == Transport::http)
      return std::make_unique<HttpPredictor>(endpoint.address,
                                             endpoint.timeout_seconds,
                                             endpoint.max_retries);
    return std::make_unique<SubprocessPredictor>(endpoint.address,
                                                 endpoint.timeout_seconds,
                                                 endpoint.max_retries);
  };
}

std::vector<TurnPrediction> drive_full(const std::vector<Dialogue>& dialogues,
                                       const PredictorFactory& factory,
                                       const DriveOptions& options) {
  DriveMode mode;
  mode.context = ContextMode::full_history;
  return drive(dialogues, factory, mode, options);
}

std::vector<TurnPrediction> drive_recurrent(const std::vector<Dialogue>& dialogues,
                                            const PredictorFactory& factory,
                                            int n_recent_turns, CarrySource carry,
                                            const DriveOptions& options) {
  if (n_recent_turns < 1) throw std::invalid_argument("n_recent_turns must be >= 1");
  DriveMode mode;
  mode.context = ContextMode::recurrent;
  mode.n_recent_turns = n_recent_turns;
  mode.carry = carry;
  return drive(dialogues, factory, mode, options);
}

// ---------------------------------------------------------------------------
// Mock predictors.

std::string to_string(MockKind k) {
  switch (k) {
    case MockKind::gold_echo: return "gold_echo";
    case MockKind::empty: return "empty";
    case MockKind::noisy_gold: return "noisy_gold";
    case MockKind::state_carry: return "state_carry";
  }
  return "unknown";
}

MockKind mock_kind_from_string(const std::string& s) {
  if (s == "gold_echo") return MockKind::gold_echo;
  if (s == "empty") return MockKind::empty;
  if (s == "noisy_gold") return MockKind::noisy_gold;
  if (s == "state_carry") return MockKind::state_carry;
  throw std::runtime_error("unknown mock kind: " + s);
}

AnswerKey AnswerKey::load(const std::filesystem::path& serialized_jsonl) {
  AnswerKey key;
  for_each_jsonl(serialized_jsonl, [&](std::size_t, const ordered_json& j) {
    key.targets[{j.at("id").get<std::string>(), j.at("turn").get<int>()}] =
        j.at("target").get<std::string>();
  });
  return key;
}

namespace {

// The recurrent input's carry block, empty when absent.
std::string extract_state_block(const std::string& input) {
  const std::string open = "<state>";
  const std::string close = "<utterance>";
  std::size_t b = input.find(open);
  if (b == std::string::npos) return "";
  std::size_t e = input.find(close, b);
  if (e == std::string::npos) return "";
  return trim(input.substr(b + open.size(), e - b - open.size()));
}

std::string mock_respond(MockKind kind, const MockParams& params,
                         const AnswerKey& key, const std::string& id,
                         const std::string& input) {
  // Driver request ids are "<dialogue_id>#<turn_index>".
  std::size_t hash = id.rfind('#');
  if (hash == std::string::npos) return "";
  std::string dialogue_id = id.substr(0, hash);
  int turn = 0;
  try {
    turn = std::stoi(id.substr(hash + 1));
  } catch (const std::exception&) {
    return "";
  }
  auto it = key.targets.find({dialogue_id, turn});
  std::string target = it == key.targets.end() ? "" : it->second;

  switch (kind) {
    case MockKind::gold_echo:
      return target;
    case MockKind::empty:
      return "";
    case MockKind::noisy_gold: {
      bool corrupt = std::find(params.corrupt_turns.begin(),
                               params.corrupt_turns.end(),
                               turn) != params.corrupt_turns.end();
      if (!corrupt) return target;
      BeliefState state = parse_state(target).state;
      state["zz-corrupted"] = "yes";  // never a gold slot, so always wrong
      return render_state(state);
    }
    case MockKind::state_carry: {
      if (turn == params.fail_turn) return "";
      BeliefState merged = parse_state(extract_state_block(input)).state;
      // Gold delta relative to the carry window: slots added or revalued
      // since turn - n.
      BeliefState current = parse_state(target).state;
      BeliefState previous;
      auto prev_it = key.targets.find({dialogue_id, turn - params.n_recent_turns});
      if (prev_it != key.targets.end())
        previous = parse_state(prev_it->second).state;
      for (const auto& [slot, value] : current) {
        auto p = previous.find(slot);
        if (p == previous.end() || p->second != value) merged[slot] = value;
      }
      return render_state(merged);
    }
  }
  return "";
}

class MockPredictor final : public Predictor {
 public:
  MockPredictor(MockKind kind, MockParams params, AnswerKey key)
      : kind_(kind), params_(std::move(params)), key_(std::move(key)) {}

  std::string predict(const std::string& id, const std::string& input) override {
    return mock_respond(kind_, params_, key_, id, input);
  }

 private:
  MockKind kind_;
  MockParams params_;
  AnswerKey key_;
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

}  // namespace

std::unique_ptr<Predictor> make_mock(MockKind kind, const MockParams& params,
                                     AnswerKey key) {
  return std::make_unique<MockPredictor>(kind, params, std::move(key));
}

PredictorEndpoint mock_predictor(MockKind kind, const MockParams& params,
                                 const std::filesystem::path& dst_binary,
                                 const std::filesystem::path& answer_key_jsonl) {
  std::string cmd = shell_quote(dst_binary.string()) + " mock-predictor --kind " +
                    to_string(kind) + " --data " +
                    shell_quote(answer_key_jsonl.string());
  if (!params.corrupt_turns.empty()) {
    cmd += " --corrupt-turns ";
    for (std::size_t i = 0; i < params.corrupt_turns.size(); ++i) {
      if (i > 0) cmd += ",";
      cmd += std::to_string(params.corrupt_turns[i]);
    }
  }
  cmd += " --fail-turn " + std::to_string(params.fail_turn);
  cmd += " --n " + std::to_string(params.n_recent_turns);
  cmd += " --seed " + std::to_string(params.seed);

  PredictorEndpoint ep;
  ep.transport = Transport::subprocess;
  ep.address = cmd;
  return ep;
}

int run_mock_predictor_loop(MockKind kind, const MockParams& params,
                            const AnswerKey& key, std::istream& in,
                            std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ordered_json req = ordered_json::parse(line, nullptr, false);
    if (req.is_discarded() || !req.is_object() || !req.contains("id") ||
        !req.contains("input"))
      continue;  // the driver times out and retries
    std::string id = req["id"].get<std::string>();
    ordered_json res;
    res["id"] = id;
    res["output"] = mock_respond(kind, params, key, id,
                                 req["input"].get<std::string>());
    out << res.dump() << "\n" << std::flush;
  }
  return 0;
}

void write_predictions(const std::vector<TurnPrediction>& predictions,
                       const std::filesystem::path& out) {
  std::ofstream os = open_output(out);
  for (const TurnPrediction& p : predictions) {
    ordered_json j;
    j["id"] = p.dialogue_id;
    j["turn"] = p.turn_index;
    j["input"] = p.input_text;
    j["raw_output"] = p.raw_output;
    ordered_json predicted = ordered_json::object();
    for (const auto& [slot, value] : p.parsed_state) predicted[slot] = value;
    j["predicted"] = std::move(predicted);
    ordered_json gold = ordered_json::object();
    for (const auto& [slot, value] : p.gold_state) gold[slot] = value;
    j["gold"] = std::move(gold);
    j["correct"] = p.correct;
    j["errored"] = p.errored;
    os << j.dump() << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + out.string());
}

std::vector<TurnPrediction> read_predictions(const std::filesystem::path& path) {
  std::vector<TurnPrediction> predictions;
  for_each_jsonl(path, [&](std::size_t lineno, const ordered_json& j) {
    try {
      TurnPrediction p;
      p.dialogue_id = j.at("id").get<std::string>();
      p.turn_index = j.at("turn").get<int>();
      p.input_text = j.value("input", std::string());
      p.raw_output = j.value("raw_output", std::string());
      for (const auto& [slot, value] : j.at("predicted").items())
        p.parsed_state[slot] = value.get<std::string>();
      for (const auto& [slot, value] : j.at("gold").items())
        p.gold_state[slot] = value.get<std::string>();
      p.errored = j.value("errored", false);
      // Recomputed rather than trusted, so the invariant holds for any file.
      p.correct = states_equal(p.parsed_state, p.gold_state);
      predictions.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": " + e.what());
    }
  });
  return predictions;
}

}  // namespace dst
