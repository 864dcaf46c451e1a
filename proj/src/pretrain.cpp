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

#include "dstkit/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "dstkit/jsonl.hpp"
#include "dstkit/text.hpp"

namespace dst {

std::string to_string(Objective o) {
  switch (o) {
    case Objective::span: return "span";
    case Objective::prefix_lm: return "prefix_lm";
    case Objective::gsg: return "gsg";
  }
  return "unknown";
}

Objective objective_from_string(const std::string& s) {
  if (s == "span") return Objective::span;
  if (s == "prefix" || s == "prefix_lm") return Objective::prefix_lm;
  if (s == "gsg") return Objective::gsg;
  throw std::runtime_error("unknown objective: " + s);
}

namespace {

long long round_half_up(double x) {
  return static_cast<long long>(std::floor(x + 0.5));
}

// Clipped unigram overlap between two token multisets.
std::size_t unigram_overlap(const std::vector<std::string>& a,
                            const std::vector<std::string>& b) {
  std::unordered_map<std::string, std::size_t> counts;
  counts.reserve(a.size());
  for (const auto& t : a) counts[t] += 1;
  std::size_t overlap = 0;
  for (const auto& t : b) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return overlap;
}

// k distinct values from 1..n (Floyd's algorithm), then sorted.
std::vector<long long> sample_distinct(std::mt19937& rng, long long k, long long n) {
  std::set<long long> chosen;
  for (long long j = n - k + 1; j <= n; ++j) {
    long long t = std::uniform_int_distribution<long long>(1, j)(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  return {chosen.begin(), chosen.end()};
}

// Uniform composition of `total` into `parts` non-negative buckets.
std::vector<long long> random_buckets(std::mt19937& rng, long long total,
                                      long long parts) {
  if (parts == 1) return {total};
  std::vector<long long> dividers = sample_distinct(rng, parts - 1, total + parts - 1);
  std::vector<long long> buckets(parts);
  long long prev = 0;
  for (long long i = 0; i < parts - 1; ++i) {
    buckets[i] = dividers[i] - prev - 1;
    prev = dividers[i];
  }
  buckets[parts - 1] = total + parts - 1 - prev;
  return buckets;
}

std::string join(const std::vector<std::string>& tokens, std::size_t begin,
                 std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += " ";
    out += tokens[i];
  }
  return out;
}

std::string sentinel(int k) { return "<extra_id_" + std::to_string(k) + ">"; }

}  // namespace

double rouge1_f(const std::vector<std::string>& candidate,
                const std::vector<std::string>& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  std::size_t overlap = unigram_overlap(reference, candidate);
  if (overlap == 0) return 0.0;
  double precision = static_cast<double>(overlap) / candidate.size();
  double recall = static_cast<double>(overlap) / reference.size();
  return 2.0 * precision * recall / (precision + recall);
}

std::vector<int> select_gap_sentences(const std::vector<std::string>& sentences,
                                      const GsgConfig& cfg) {
  if (sentences.empty()) throw std::invalid_argument("empty document");
  if (cfg.gap_ratio.has_value() == cfg.fixed_m.has_value())
    throw std::invalid_argument("set exactly one of gap_ratio / fixed_m");

  int n = static_cast<int>(sentences.size());
  long long m = cfg.fixed_m ? *cfg.fixed_m
                            : round_half_up(*cfg.gap_ratio * n);
  m = std::clamp<long long>(m, 1, n);

  std::vector<std::vector<std::string>> tokens(n);
  for (int i = 0; i < n; ++i) tokens[i] = tokenize_lower(sentences[i]);

  // F1 = 2*overlap / (|candidate| + |reference|); scores are kept as exact
  // (numerator, denominator) pairs so ranking and the lower-index tie rule
  // never depend on floating-point rounding.
  struct Score {
    std::size_t num = 0;  // 2 * overlap
    std::size_t den = 0;  // |candidate| + |reference|
    int index = 0;
  };
  std::vector<Score> scores(n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> remainder;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      remainder.insert(remainder.end(), tokens[j].begin(), tokens[j].end());
    }
    std::size_t overlap = unigram_overlap(remainder, tokens[i]);
    scores[i].index = i;
    if (!tokens[i].empty() && !remainder.empty() && overlap > 0) {
      scores[i].num = 2 * overlap;
      scores[i].den = tokens[i].size() + remainder.size();
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Score& x = scores[a];
    const Score& y = scores[b];
    // x.num/x.den > y.num/y.den, with 0/0 meaning a zero score.
    unsigned long long lhs = static_cast<unsigned long long>(x.num) *
                             (y.den == 0 ? 1 : y.den);
    unsigned long long rhs = static_cast<unsigned long long>(y.num) *
                             (x.den == 0 ? 1 : x.den);
    if (lhs != rhs) return lhs > rhs;
    return x.index < y.index;
  });

  std::vector<int> selected(order.begin(), order.begin() + m);
  std::sort(selected.begin(), selected.end());  // document order
  return selected;
}

PretrainExample build_gsg(const std::string& doc, const GsgConfig& cfg,
                          const std::string& doc_id) {
  std::vector<std::string> sentences = split_sentences(doc);
  if (sentences.empty()) throw std::invalid_argument("empty document");
  std::vector<int> selected = select_gap_sentences(sentences, cfg);
  std::set<int> mask(selected.begin(), selected.end());

  PretrainExample ex;
  ex.objective = Objective::gsg;
  ex.source_doc_id = doc_id;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (!ex.input_text.empty()) ex.input_text += " ";
    ex.input_text += mask.count(static_cast<int>(i)) ? cfg.mask_token : sentences[i];
  }
  for (int i : selected) {
    if (!ex.target_text.empty()) ex.target_text += " ";
    ex.target_text += sentences[i];
  }
  return ex;
}

PretrainExample build_span_corruption(const std::string& doc,
                                      const SpanCorruptionConfig& cfg,
                                      const std::string& doc_id) {
  if (cfg.corruption_rate <= 0.0 || cfg.corruption_rate >= 1.0)
    throw std::invalid_argument("corruption_rate must be in (0, 1)");
  if (cfg.mean_span_length < 1.0)
    throw std::invalid_argument("mean_span_length must be >= 1");

  std::vector<std::string> tokens = split_whitespace(doc);
  long long n = static_cast<long long>(tokens.size());
  if (n < 2) throw std::invalid_argument("document too short (needs >= 2 tokens)");

  long long num_masked =
      std::clamp<long long>(round_half_up(cfg.corruption_rate * n), 1, n - 1);
  long long num_spans = std::clamp<long long>(
      round_half_up(static_cast<double>(num_masked) / cfg.mean_span_length), 1,
      num_masked);
  // Interior gaps need one unmasked token each.
  num_spans = std::min(num_spans, n - num_masked + 1);

  std::mt19937 rng(cfg.rng_seed);

  // Span lengths: a uniform composition of num_masked into num_spans parts >= 1.
  std::vector<long long> lengths(num_spans, 0);
  if (num_spans == 1) {
    lengths[0] = num_masked;
  } else {
    std::vector<long long> cuts = sample_distinct(rng, num_spans - 1, num_masked - 1);
    long long prev = 0;
    for (long long i = 0; i < num_spans - 1; ++i) {
      lengths[i] = cuts[i] - prev;
      prev = cuts[i];
    }
    lengths[num_spans - 1] = num_masked - prev;
  }

  // Gap layout: boundary gaps may be empty, interior gaps hold >= 1 token.
  long long extra = n - num_masked - (num_spans - 1);
  std::vector<long long> gaps = random_buckets(rng, extra, num_spans + 1);
  for (long long i = 1; i < num_spans; ++i) gaps[i] += 1;

  PretrainExample ex;
  ex.objective = Objective::span;
  ex.source_doc_id = doc_id;
  std::size_t pos = 0;
  std::string& input = ex.input_text;
  std::string& target = ex.target_text;
  auto append = [](std::string& s, const std::string& piece) {
    if (!s.empty()) s += " ";
    s += piece;
  };
  for (long long k = 0; k < num_spans; ++k) {
    for (long long g = 0; g < gaps[k]; ++g) append(input, tokens[pos++]);
    append(input, sentinel(static_cast<int>(k)));
    append(target, sentinel(static_cast<int>(k)));
    for (long long s = 0; s < lengths[k]; ++s) append(target, tokens[pos++]);
  }
  for (long long g = 0; g < gaps[num_spans]; ++g) append(input, tokens[pos++]);
  append(target, sentinel(static_cast<int>(num_spans)));  // terminal sentinel
  return ex;
}

PretrainExample build_prefix_lm(const std::string& doc, std::uint32_t rng_seed,
                                const std::string& doc_id) {
  std::vector<std::string> tokens = split_whitespace(doc);
  std::size_t n = tokens.size();
  if (n < 2) throw std::invalid_argument("document too short (needs >= 2 tokens)");
  std::mt19937 rng(rng_seed);
  std::size_t split =
      std::uniform_int_distribution<std::size_t>(1, n - 1)(rng);

  PretrainExample ex;
  ex.objective = Objective::prefix_lm;
  ex.source_doc_id = doc_id;
  ex.input_text = join(tokens, 0, split);
  ex.target_text = join(tokens, split, n);
  return ex;
}

CorpusCounts build_corpus(const std::function<std::optional<Document>()>& next_doc,
                          const PretrainConfig& cfg,
                          const std::filesystem::path& out) {
  // Config problems are fatal; only per-document failures count as skips.
  if (cfg.objective == Objective::span) {
    if (cfg.span.corruption_rate <= 0.0 || cfg.span.corruption_rate >= 1.0)
      throw std::runtime_error("corruption_rate must be in (0, 1)");
    if (cfg.span.mean_span_length < 1.0)
      throw std::runtime_error("mean_span_length must be >= 1");
  }
  if (cfg.objective == Objective::gsg &&
      cfg.gsg.gap_ratio.has_value() == cfg.gsg.fixed_m.has_value())
    throw std::runtime_error("set exactly one of gap_ratio / fixed_m");

  std::ofstream os = open_output(out);
  CorpusCounts counts;
  std::uint32_t doc_index = 0;
  while (auto doc = next_doc()) {
    std::uint32_t doc_seed = cfg.seed ^ doc_index;
    ++doc_index;
    try {
      PretrainExample ex;
      switch (cfg.objective) {
        case Objective::span: {
          SpanCorruptionConfig span_cfg = cfg.span;
          span_cfg.rng_seed = doc_seed;
          ex = build_span_corruption(doc->text, span_cfg, doc->id);
          break;
        }
        case Objective::prefix_lm:
          ex = build_prefix_lm(doc->text, doc_seed, doc->id);
          break;
        case Objective::gsg:
          ex = build_gsg(doc->text, cfg.gsg, doc->id);
          break;
      }
      ordered_json j;
      j["input"] = ex.input_text;
      j["target"] = ex.target_text;
      j["objective"] = to_string(ex.objective);
      j["doc_id"] = ex.source_doc_id;
      os << j.dump() << "\n";
      counts.emitted += 1;
    } catch (const std::invalid_argument&) {
      counts.skipped += 1;
    }
  }
  if (!os) throw std::runtime_error("write failed: " + out.string());
  return counts;
}

}  // namespace dst
