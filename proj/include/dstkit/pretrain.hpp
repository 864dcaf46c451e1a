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

#ifndef DSTKIT_PRETRAIN_HPP_
#define DSTKIT_PRETRAIN_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dst {

enum class Objective { span, prefix_lm, gsg };

std::string to_string(Objective o);
Objective objective_from_string(const std::string& s);  // accepts "prefix" too

struct PretrainExample {
  std::string input_text;
  std::string target_text;
  Objective objective = Objective::span;
  std::string source_doc_id;
};

struct SpanCorruptionConfig {
  double corruption_rate = 0.15;  // fraction of tokens masked
  double mean_span_length = 3.0;
  std::uint32_t rng_seed = 0;
};

struct GsgConfig {
  // Exactly one of gap_ratio / fixed_m is set.
  std::optional<double> gap_ratio = 0.15;  // fraction of sentences selected
  std::optional<int> fixed_m;
  std::string mask_token = "<mask_1>";
  // Kept for config compatibility; ties resolve deterministically by index,
  // so no randomness is consumed.
  std::uint32_t rng_seed = 0;
};

// F1 of clipped unigram overlap between two token lists. Tokens are expected
// lowercased and whitespace-split. 0 when either side is empty or there is
// no overlap.
double rouge1_f(const std::vector<std::string>& candidate,
                const std::vector<std::string>& reference);

// Scores each sentence against the concatenation of all the others
// (independent selection) and returns the indices of the top-m scores in
// document order. Ties break toward the lower index; score comparisons are
// exact ratios, not floating point, so ranking is reproducible.
std::vector<int> select_gap_sentences(const std::vector<std::string>& sentences,
                                      const GsgConfig& cfg);

// Masks the selected gap sentences with cfg.mask_token; the target is the
// selected sentences joined by single spaces in document order.
PretrainExample build_gsg(const std::string& doc, const GsgConfig& cfg,
                          const std::string& doc_id = "");

// Replaces sampled non-overlapping, non-adjacent token spans with sentinels
// <extra_id_0>, <extra_id_1>, ...; the target lists each sentinel followed by
// its span and ends with one terminal sentinel. Deterministic given rng_seed.
// Requires at least 2 whitespace tokens.
PretrainExample build_span_corruption(const std::string& doc,
                                      const SpanCorruptionConfig& cfg,
                                      const std::string& doc_id = "");

// Splits the token sequence at a point drawn uniformly from 1..n-1;
// input + " " + target reconstructs the source token sequence.
PretrainExample build_prefix_lm(const std::string& doc, std::uint32_t rng_seed,
                                const std::string& doc_id = "");

struct Document {
  std::string id;
  std::string text;
};

struct PretrainConfig {
  Objective objective = Objective::span;
  SpanCorruptionConfig span;
  GsgConfig gsg;
  std::uint32_t seed = 0;
};

struct CorpusCounts {
  std::size_t emitted = 0;
  std::size_t skipped = 0;
};

// Streams documents through the chosen builder into JSONL
// ({"input","target","objective","doc_id"} per line). Documents too short
// for the objective are skipped and counted. Per-document seeds are derived
// as seed ^ doc_index, so output does not depend on scheduling.
CorpusCounts build_corpus(const std::function<std::optional<Document>()>& next_doc,
                          const PretrainConfig& cfg,
                          const std::filesystem::path& out);

}  // namespace dst

#endif  // DSTKIT_PRETRAIN_HPP_
