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
//
// dst: single binary over the pipeline stages. Every stage reads and writes
// JSONL so stages chain in shell scripts; diagnostics go to stderr only.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dstkit/analysis.hpp"
#include "dstkit/corpus.hpp"
#include "dstkit/driver.hpp"
#include "dstkit/jsonl.hpp"
#include "dstkit/pretrain.hpp"
#include "dstkit/serialize.hpp"
#include "dstkit/text.hpp"

namespace {

using dst::ordered_json;

ordered_json make_meta(const std::string& subcommand, ordered_json config) {
  ordered_json meta;
  meta["tool"] = "dst";
  meta["subcommand"] = subcommand;
  meta["config"] = std::move(config);
  return meta;
}

// --- ingest -----------------------------------------------------------------

struct IngestArgs {
  std::string dataset;
  std::string raw_dir;
  std::string split;
  std::string out;
  std::string report_path;
  bool dstc2_transcriptions = false;
};

void run_ingest(const IngestArgs& args) {
  dst::Dataset dataset = dst::dataset_from_string(args.dataset);
  dst::Split split = dst::split_from_string(args.split);
  dst::IngestOptions options;
  options.dstc2_transcriptions = args.dstc2_transcriptions;

  dst::IngestReport report;
  std::vector<dst::Dialogue> dialogues =
      dst::ingest(dataset, args.raw_dir, split, &report, options);
  dst::write_normalized(dialogues, args.out);

  ordered_json config;
  config["dataset"] = args.dataset;
  config["raw"] = args.raw_dir;
  config["split"] = args.split;
  config["out"] = args.out;
  config["dstc2_transcriptions"] = args.dstc2_transcriptions;
  dst::write_meta_sidecar(args.out, make_meta("ingest", config));

  if (!args.report_path.empty()) {
    ordered_json r;
    r["dataset"] = dst::to_string(report.dataset);
    r["split"] = dst::to_string(report.split);
    r["dialogues"] = report.dialogues;
    r["turns"] = report.turns;
    r["skipped_count"] = report.skipped.size();
    ordered_json skipped = ordered_json::array();
    for (const auto& s : report.skipped) {
      ordered_json js;
      js["id"] = s.id;
      js["reason"] = s.reason;
      skipped.push_back(std::move(js));
    }
    r["skipped"] = std::move(skipped);
    r["monotonicity_warnings"] = report.monotonicity_warnings;
    r["notes"] = report.notes;
    r["config"] = config;
    std::ofstream os = dst::open_output(args.report_path);
    os << r.dump(2) << "\n";
  }

  std::cerr << "ingest: " << report.dialogues << " dialogue(s), " << report.turns
            << " turn(s), " << report.skipped.size() << " skipped\n";
}

// --- serialize ---------------------------------------------------------------

struct SerializeArgs {
  std::string mode = "full";
  int n_recent_turns = 1;
  std::string in;
  std::string out;
};

void run_serialize(const SerializeArgs& args) {
  dst::SerializationConfig config;
  config.mode = args.mode == "full" ? dst::ContextMode::full_history
                                    : dst::ContextMode::recurrent;
  config.n_recent_turns = args.n_recent_turns;

  std::vector<dst::Dialogue> dialogues = dst::read_normalized(args.in);
  std::ofstream os = dst::open_output(args.out);
  std::size_t count = 0;
  dst::emit_corpus(dialogues, config, [&](const dst::SerializedExample& ex) {
    ordered_json j;
    j["id"] = ex.dialogue_id;
    j["turn"] = ex.turn_index;
    j["input"] = ex.input_text;
    j["target"] = ex.target_text;
    os << j.dump() << "\n";
    ++count;
  });
  if (!os) throw std::runtime_error("write failed: " + args.out);

  ordered_json config_json;
  config_json["mode"] = args.mode;
  config_json["n"] = args.n_recent_turns;
  config_json["in"] = args.in;
  config_json["out"] = args.out;
  dst::write_meta_sidecar(args.out, make_meta("serialize", config_json));

  std::cerr << "serialize: " << count << " example(s)\n";
}

// --- pretrain ----------------------------------------------------------------

struct PretrainArgs {
  std::string objective;
  std::string in;
  std::string out;
  std::uint32_t seed = 0;
  double corruption_rate = 0.15;
  double mean_span_length = 3.0;
  std::optional<double> gap_ratio;
  std::optional<int> fixed_m;
  std::string mask_token = "<mask_1>";
};

// Documents come either from a .jsonl file ({"text", optional "id"} per line)
// or from plain text with one document per line.
std::function<std::optional<dst::Document>()> document_reader(
    const std::string& path, std::ifstream& in) {
  bool jsonl = path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl";
  auto lineno = std::make_shared<std::size_t>(0);
  return [&in, jsonl, lineno, path]() -> std::optional<dst::Document> {
    std::string line;
    while (std::getline(in, line)) {
      ++*lineno;
      if (dst::trim(line).empty()) continue;
      if (!jsonl)
        return dst::Document{"line-" + std::to_string(*lineno), line};
      ordered_json j = ordered_json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("text"))
        throw std::runtime_error(path + ":" + std::to_string(*lineno) +
                                 ": expected {\"text\": ...}");
      std::string id = j.value("id", "line-" + std::to_string(*lineno));
      return dst::Document{id, j["text"].get<std::string>()};
    }
    return std::nullopt;
  };
}

void run_pretrain(const PretrainArgs& args) {
  dst::PretrainConfig config;
  config.objective = dst::objective_from_string(args.objective);
  config.seed = args.seed;
  config.span.corruption_rate = args.corruption_rate;
  config.span.mean_span_length = args.mean_span_length;
  if (args.fixed_m) {
    config.gsg.fixed_m = args.fixed_m;
    config.gsg.gap_ratio.reset();
  } else {
    config.gsg.gap_ratio = args.gap_ratio.value_or(0.15);
  }
  config.gsg.mask_token = args.mask_token;
  config.gsg.rng_seed = args.seed;

  std::ifstream in = dst::open_input(args.in);
  dst::CorpusCounts counts =
      dst::build_corpus(document_reader(args.in, in), config, args.out);

  ordered_json config_json;
  config_json["objective"] = dst::to_string(config.objective);
  config_json["in"] = args.in;
  config_json["out"] = args.out;
  config_json["seed"] = args.seed;
  if (config.objective == dst::Objective::span) {
    config_json["corruption_rate"] = args.corruption_rate;
    config_json["mean_span_length"] = args.mean_span_length;
  }
  if (config.objective == dst::Objective::gsg) {
    if (config.gsg.fixed_m)
      config_json["m"] = *config.gsg.fixed_m;
    else
      config_json["gap_ratio"] = *config.gsg.gap_ratio;
    config_json["mask_token"] = args.mask_token;
  }
  dst::write_meta_sidecar(args.out, make_meta("pretrain", config_json));

  std::cerr << "pretrain: " << counts.emitted << " emitted, " << counts.skipped
            << " skipped\n";
}

// --- drive -------------------------------------------------------------------

struct DriveArgs {
  std::string mode = "full";
  int n_recent_turns = 1;
  std::string carry = "predicted";
  std::string endpoint;
  std::string in;
  std::string out;
  int parallel = 1;
  double timeout_seconds = 30.0;
  int max_retries = 2;
};

void run_drive(const DriveArgs& args) {
  std::vector<dst::Dialogue> dialogues = dst::read_normalized(args.in);
  dst::PredictorEndpoint endpoint = dst::parse_endpoint(args.endpoint);
  endpoint.timeout_seconds = args.timeout_seconds;
  endpoint.max_retries = args.max_retries;
  dst::PredictorFactory factory = dst::endpoint_factory(endpoint);
  dst::DriveOptions options;
  options.parallel = args.parallel;

  std::vector<dst::TurnPrediction> predictions;
  if (args.mode == "full") {
    predictions = dst::drive_full(dialogues, factory, options);
  } else {
    dst::CarrySource carry = args.carry == "oracle" ? dst::CarrySource::oracle
                                                    : dst::CarrySource::predicted;
    predictions = dst::drive_recurrent(dialogues, factory, args.n_recent_turns,
                                       carry, options);
  }
  dst::write_predictions(predictions, args.out);

  std::set<std::string> datasets;
  for (const auto& d : dialogues) datasets.insert(dst::to_string(d.dataset));
  std::string dataset_names;
  for (const auto& name : datasets) {
    if (!dataset_names.empty()) dataset_names += ",";
    dataset_names += name;
  }

  ordered_json config_json;
  config_json["mode"] = args.mode;
  config_json["n"] = args.n_recent_turns;
  config_json["carry"] = args.mode == "recurrent" ? args.carry : "";
  config_json["endpoint"] = args.endpoint;
  config_json["in"] = args.in;
  config_json["out"] = args.out;
  config_json["parallel"] = args.parallel;
  config_json["timeout"] = args.timeout_seconds;
  config_json["retries"] = args.max_retries;
  config_json["dataset"] = dataset_names;
  dst::write_meta_sidecar(args.out, make_meta("drive", config_json));

  std::size_t errored = 0;
  for (const auto& p : predictions) errored += p.errored ? 1 : 0;
  std::cerr << "drive: " << predictions.size() << " turn(s), " << errored
            << " errored\n";
}

// --- eval / compare ----------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string out_json;
  std::string out_csv;
  std::string run_id;
};

void run_eval(const EvalArgs& args) {
  std::vector<dst::TurnPrediction> predictions = dst::read_predictions(args.pred);

  dst::RunProvenance provenance;
  provenance.run_id = args.run_id.empty()
                          ? std::filesystem::path(args.pred).stem().string()
                          : args.run_id;
  // The drive sidecar, when present, supplies dataset/mode provenance.
  ordered_json meta = dst::read_meta_sidecar(args.pred);
  if (meta.is_object() && meta.contains("config")) {
    const auto& c = meta["config"];
    provenance.dataset = c.value("dataset", std::string());
    provenance.mode = c.value("mode", std::string());
    provenance.n_recent_turns = c.value("n", 0);
    provenance.carry = c.value("carry", std::string());
  }

  dst::RunReport report = dst::make_run_report(predictions, provenance);

  ordered_json config_json;
  config_json["pred"] = args.pred;
  config_json["run_id"] = provenance.run_id;
  if (!args.out_json.empty()) {
    std::ofstream os = dst::open_output(args.out_json);
    os << dst::run_report_json(report);
    dst::write_meta_sidecar(args.out_json, make_meta("eval", config_json));
  }
  if (!args.out_csv.empty()) {
    std::ofstream os = dst::open_output(args.out_csv);
    os << dst::run_report_csv(report);
    dst::write_meta_sidecar(args.out_csv, make_meta("eval", config_json));
  }
  if (args.out_json.empty() && args.out_csv.empty())
    std::cout << dst::run_report_json(report);

  std::cerr << "eval: jga " << report.jga << " over " << report.turn_count
            << " turn(s)\n";
}

struct CompareArgs {
  std::vector<std::string> reports;
  std::string out_csv;
  std::string out_json;
};

void run_compare(const CompareArgs& args) {
  std::vector<dst::RunReport> reports;
  for (const std::string& path : args.reports) {
    std::ifstream in = dst::open_input(path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    reports.push_back(dst::run_report_from_json(text));
  }
  std::string csv = dst::compare_runs_csv(reports);
  std::string json = dst::compare_runs_json(reports);

  std::set<std::string> datasets;
  for (const auto& r : reports) datasets.insert(r.dataset);
  if (datasets.size() > 1)
    std::cerr << "compare: reports span multiple datasets; rows are not merged\n";

  if (!args.out_csv.empty()) {
    std::ofstream os = dst::open_output(args.out_csv);
    os << csv;
  }
  if (!args.out_json.empty()) {
    std::ofstream os = dst::open_output(args.out_json);
    os << json;
  }
  if (args.out_csv.empty() && args.out_json.empty()) std::cout << csv;
}

// --- mock-predictor ----------------------------------------------------------

struct MockArgs {
  std::string kind;
  std::string data;
  std::vector<int> corrupt_turns;
  int fail_turn = 1;
  int n_recent_turns = 1;
  std::uint32_t seed = 0;
};

int run_mock(const MockArgs& args) {
  dst::MockKind kind = dst::mock_kind_from_string(args.kind);
  dst::AnswerKey key = dst::AnswerKey::load(args.data);
  dst::MockParams params;
  params.corrupt_turns = args.corrupt_turns;
  params.fail_turn = args.fail_turn;
  params.n_recent_turns = args.n_recent_turns;
  params.seed = args.seed;
  return dst::run_mock_predictor_loop(kind, params, key, std::cin, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dst: seq2seq dialogue state tracking data toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; flags override file values")
      ->envname("DST_CONFIG");

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand(
      "ingest", "Normalize a raw dataset release into dialogue JSONL");
  ingest->add_option("--dataset", ingest_args.dataset, "Dataset id")
      ->required()
      ->check(CLI::IsMember({"multiwoz21", "multiwoz22", "multiwoz23",
                             "multiwoz24", "woz20", "dstc2"}));
  ingest->add_option("--raw", ingest_args.raw_dir, "Raw release directory")
      ->required();
  ingest->add_option("--split", ingest_args.split, "Split id")
      ->required()
      ->check(CLI::IsMember({"train", "dev", "test"}));
  ingest->add_option("--out", ingest_args.out, "Normalized JSONL output")
      ->required();
  ingest->add_option("--report", ingest_args.report_path,
                     "Ingestion report JSON output");
  ingest->add_flag("--dstc2-transcriptions", ingest_args.dstc2_transcriptions,
                   "DSTC2: use transcriptions instead of the 1-best ASR hypothesis");
  ingest->callback([&] { run_ingest(ingest_args); });

  SerializeArgs serialize_args;
  auto* serialize = app.add_subcommand(
      "serialize", "Emit (input, target) pairs from normalized dialogues");
  serialize->add_option("--mode", serialize_args.mode, "Context representation")
      ->check(CLI::IsMember({"full", "recurrent"}));
  serialize->add_option("--n", serialize_args.n_recent_turns,
                        "Recent turns kept in recurrent mode")
      ->check(CLI::PositiveNumber);
  serialize->add_option("--in", serialize_args.in, "Normalized JSONL")->required();
  serialize->add_option("--out", serialize_args.out, "Corpus JSONL output")
      ->required();
  serialize->callback([&] { run_serialize(serialize_args); });

  PretrainArgs pretrain_args;
  double gap_ratio_flag = 0.15;
  int fixed_m_flag = 0;
  auto* pretrain = app.add_subcommand(
      "pretrain", "Build a self-supervised pre-training corpus");
  pretrain->add_option("--objective", pretrain_args.objective, "Objective")
      ->required()
      ->check(CLI::IsMember({"span", "prefix", "gsg"}));
  pretrain->add_option("--in", pretrain_args.in,
                       "Documents (.jsonl with {\"text\"} or one doc per line)")
      ->required();
  pretrain->add_option("--out", pretrain_args.out, "Corpus JSONL output")
      ->required();
  pretrain->add_option("--seed", pretrain_args.seed, "RNG seed");
  pretrain->add_option("--rate", pretrain_args.corruption_rate,
                       "Span corruption: fraction of tokens masked");
  pretrain->add_option("--mean-span", pretrain_args.mean_span_length,
                       "Span corruption: mean span length");
  auto* ratio_opt =
      pretrain->add_option("--gap-ratio", gap_ratio_flag,
                           "GSG: fraction of sentences selected");
  auto* m_opt = pretrain->add_option("--m", fixed_m_flag,
                                     "GSG: fixed number of gap sentences");
  m_opt->excludes(ratio_opt);
  pretrain->add_option("--mask-token", pretrain_args.mask_token, "GSG mask token");
  pretrain->callback([&] {
    if (m_opt->count() > 0)
      pretrain_args.fixed_m = fixed_m_flag;
    else if (ratio_opt->count() > 0)
      pretrain_args.gap_ratio = gap_ratio_flag;
    run_pretrain(pretrain_args);
  });

  DriveArgs drive_args;
  auto* drive = app.add_subcommand(
      "drive", "Run an external predictor over normalized dialogues");
  drive->add_option("--mode", drive_args.mode, "Context representation")
      ->check(CLI::IsMember({"full", "recurrent"}));
  drive->add_option("--n", drive_args.n_recent_turns, "Recent turns (recurrent)")
      ->check(CLI::PositiveNumber);
  drive->add_option("--carry", drive_args.carry, "Carry state source (recurrent)")
      ->check(CLI::IsMember({"predicted", "oracle"}));
  drive->add_option("--endpoint", drive_args.endpoint,
                    "subprocess:CMD, bare command line, or http://host:port")
      ->required();
  drive->add_option("--in", drive_args.in, "Normalized JSONL")->required();
  drive->add_option("--out", drive_args.out, "Predictions JSONL output")
      ->required();
  drive->add_option("--parallel", drive_args.parallel,
                    "Dialogues processed concurrently")
      ->check(CLI::PositiveNumber);
  drive->add_option("--timeout", drive_args.timeout_seconds,
                    "Per-request timeout in seconds");
  drive->add_option("--retries", drive_args.max_retries, "Retries per request");
  drive->callback([&] { run_drive(drive_args); });

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score a predictions file");
  eval->add_option("--pred", eval_args.pred, "Predictions JSONL")->required();
  eval->add_option("--out-json", eval_args.out_json, "Report JSON output");
  eval->add_option("--out-csv", eval_args.out_csv, "Report CSV output");
  eval->add_option("--run-id", eval_args.run_id, "Run identifier");
  eval->callback([&] { run_eval(eval_args); });

  CompareArgs compare_args;
  auto* compare = app.add_subcommand("compare", "Compare run reports");
  compare->add_option("--reports", compare_args.reports, "Report JSON files")
      ->required()
      ->expected(-1);
  compare->add_option("--out-csv", compare_args.out_csv, "Comparison CSV output");
  compare->add_option("--out-json", compare_args.out_json,
                      "Comparison JSON output");
  compare->callback([&] { run_compare(compare_args); });

  MockArgs mock_args;
  int mock_exit = 0;
  auto* mock = app.add_subcommand(
      "mock-predictor", "Serve a deterministic test predictor on stdin/stdout");
  mock->add_option("--kind", mock_args.kind, "Mock behavior")
      ->required()
      ->check(CLI::IsMember({"gold_echo", "empty", "noisy_gold", "state_carry"}));
  mock->add_option("--data", mock_args.data,
                   "Serialized corpus JSONL used as the answer key")
      ->required();
  mock->add_option("--corrupt-turns", mock_args.corrupt_turns,
                   "noisy_gold: turn indices to corrupt")
      ->delimiter(',');
  mock->add_option("--fail-turn", mock_args.fail_turn,
                   "state_carry: turn answered wrong");
  mock->add_option("--n", mock_args.n_recent_turns,
                   "state_carry: carry window for gold deltas");
  mock->add_option("--seed", mock_args.seed, "RNG seed");
  mock->callback([&] { mock_exit = run_mock(mock_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "dst: " << e.what() << "\n";
    return 1;
  }
  return mock_exit;
}
