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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dstkit/analysis.hpp"
#include "dstkit/corpus.hpp"
#include "dstkit/pretrain.hpp"
#include "dstkit/serialize.hpp"
#include "dstkit/stateparse.hpp"
#include "dstkit/text.hpp"

namespace py = pybind11;

namespace {

// Normalized-schema dict -> Dialogue:
//   {"id", "dataset", "split", "turns": [{"index","agent","user","state"}]}
dst::Dialogue dialogue_from_dict(const py::dict& d) {
  dst::Dialogue out;
  out.id = py::cast<std::string>(d["id"]);
  out.dataset = d.contains("dataset")
                    ? dst::dataset_from_string(py::cast<std::string>(d["dataset"]))
                    : dst::Dataset::multiwoz21;
  out.split = d.contains("split")
                  ? dst::split_from_string(py::cast<std::string>(d["split"]))
                  : dst::Split::train;
  for (auto turn : d["turns"]) {
    py::dict t = py::cast<py::dict>(turn);
    dst::Turn parsed;
    parsed.index = py::cast<int>(t["index"]);
    if (t.contains("agent") && !t["agent"].is_none())
      parsed.agent_utterance =
          dst::Utterance{dst::Speaker::agent, py::cast<std::string>(t["agent"])};
    parsed.user_utterance = {dst::Speaker::user, py::cast<std::string>(t["user"])};
    if (t.contains("state"))
      parsed.gold_state = py::cast<dst::BeliefState>(t["state"]);
    out.turns.push_back(std::move(parsed));
  }
  return out;
}

py::dict example_to_dict(const dst::SerializedExample& ex) {
  py::dict out;
  out["id"] = ex.dialogue_id;
  out["turn"] = ex.turn_index;
  out["input"] = ex.input_text;
  out["target"] = ex.target_text;
  return out;
}

py::dict pretrain_to_dict(const dst::PretrainExample& ex) {
  py::dict out;
  out["input"] = ex.input_text;
  out["target"] = ex.target_text;
  out["objective"] = dst::to_string(ex.objective);
  out["doc_id"] = ex.source_doc_id;
  return out;
}

dst::GsgConfig gsg_config(std::optional<double> gap_ratio, std::optional<int> m,
                          const std::string& mask_token) {
  dst::GsgConfig cfg;
  cfg.mask_token = mask_token;
  if (m) {
    cfg.fixed_m = m;
    cfg.gap_ratio.reset();
  } else {
    cfg.gap_ratio = gap_ratio.value_or(0.15);
  }
  return cfg;
}

// Prediction dicts ({"id","turn","predicted","gold"}) -> TurnPredictions with
// correctness recomputed.
std::vector<dst::TurnPrediction> predictions_from_dicts(const py::list& rows) {
  std::vector<dst::TurnPrediction> out;
  for (auto row : rows) {
    py::dict r = py::cast<py::dict>(row);
    dst::TurnPrediction p;
    p.dialogue_id = py::cast<std::string>(r["id"]);
    p.turn_index = py::cast<int>(r["turn"]);
    p.parsed_state = py::cast<dst::BeliefState>(r["predicted"]);
    p.gold_state = py::cast<dst::BeliefState>(r["gold"]);
    p.correct = dst::states_equal(p.parsed_state, p.gold_state);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "dstkit core: state grammar, context serialization, pre-training "
            "objective builders and JGA evaluation";

  // stateparse
  m.def("render_state", &dst::render_state, py::arg("state"));
  m.def(
      "parse_state",
      [](const std::string& text) {
        dst::ParseOutcome o = dst::parse_state(text);
        py::dict out;
        out["state"] = o.state;
        out["dropped_fragments"] = o.dropped_fragments;
        out["duplicate_slots"] = o.duplicate_slots;
        return out;
      },
      py::arg("text"));
  m.def("canonicalize", &dst::canonicalize, py::arg("state"));
  m.def("states_equal", &dst::states_equal, py::arg("a"), py::arg("b"));

  // serialize
  m.def(
      "serialize_full",
      [](const py::dict& dialogue, int turn) {
        return example_to_dict(dst::serialize_full(dialogue_from_dict(dialogue), turn));
      },
      py::arg("dialogue"), py::arg("turn"));
  m.def(
      "serialize_recurrent",
      [](const py::dict& dialogue, int turn, int n, const dst::BeliefState& carry) {
        return example_to_dict(
            dst::serialize_recurrent(dialogue_from_dict(dialogue), turn, n, carry));
      },
      py::arg("dialogue"), py::arg("turn"), py::arg("n"), py::arg("carry_state"));

  // pretrain
  m.def("rouge1_f", &dst::rouge1_f, py::arg("candidate"), py::arg("reference"));
  m.def("tokenize", &dst::tokenize_lower, py::arg("text"));
  m.def("split_sentences", &dst::split_sentences, py::arg("text"));
  m.def(
      "select_gap_sentences",
      [](const std::vector<std::string>& sentences, std::optional<double> gap_ratio,
         std::optional<int> m, const std::string& mask_token) {
        return dst::select_gap_sentences(sentences,
                                         gsg_config(gap_ratio, m, mask_token));
      },
      py::arg("sentences"), py::arg("gap_ratio") = std::nullopt,
      py::arg("m") = std::nullopt, py::arg("mask_token") = "<mask_1>");
  m.def(
      "build_gsg",
      [](const std::string& doc, std::optional<double> gap_ratio,
         std::optional<int> m, const std::string& mask_token,
         const std::string& doc_id) {
        return pretrain_to_dict(
            dst::build_gsg(doc, gsg_config(gap_ratio, m, mask_token), doc_id));
      },
      py::arg("doc"), py::arg("gap_ratio") = std::nullopt,
      py::arg("m") = std::nullopt, py::arg("mask_token") = "<mask_1>",
      py::arg("doc_id") = "");
  m.def(
      "build_span_corruption",
      [](const std::string& doc, double rate, double mean_span_length,
         std::uint32_t seed, const std::string& doc_id) {
        dst::SpanCorruptionConfig cfg;
        cfg.corruption_rate = rate;
        cfg.mean_span_length = mean_span_length;
        cfg.rng_seed = seed;
        return pretrain_to_dict(dst::build_span_corruption(doc, cfg, doc_id));
      },
      py::arg("doc"), py::arg("rate") = 0.15, py::arg("mean_span_length") = 3.0,
      py::arg("seed") = 0, py::arg("doc_id") = "");
  m.def(
      "build_prefix_lm",
      [](const std::string& doc, std::uint32_t seed, const std::string& doc_id) {
        return pretrain_to_dict(dst::build_prefix_lm(doc, seed, doc_id));
      },
      py::arg("doc"), py::arg("seed") = 0, py::arg("doc_id") = "");

  // analysis
  m.def(
      "jga",
      [](const py::list& rows) { return dst::jga(predictions_from_dicts(rows)); },
      py::arg("predictions"),
      "Joint goal accuracy over [{'id','turn','predicted','gold'}] rows.");
  m.def(
      "slot_accuracy",
      [](const py::list& rows) {
        return dst::slot_accuracy(predictions_from_dicts(rows));
      },
      py::arg("predictions"));
  m.def(
      "propagation_stats",
      [](const py::list& rows) {
        dst::PropagationStats s =
            dst::propagation_stats(predictions_from_dicts(rows));
        py::dict out;
        py::dict hist;
        for (const auto& [turn, count] : s.first_error_turn_histogram)
          hist[py::int_(turn)] = count;
        out["first_error_turn_histogram"] = hist;
        out["post_error_recovery_rate"] =
            s.post_error_recovery_rate ? py::cast(*s.post_error_recovery_rate)
                                       : py::none();
        out["consecutive_error_run_mean"] =
            s.consecutive_error_run_mean ? py::cast(*s.consecutive_error_run_mean)
                                         : py::none();
        return out;
      },
      py::arg("predictions"));

  // text
  m.def("nfc", &dst::nfc, py::arg("text"));
}
