#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "corag/extraction.hpp"
#include "corag/gateway.hpp"
#include "corag/retriever.hpp"
#include "corag/stats.hpp"
#include "json.hpp"

namespace corag {

enum class ContextPolicy { replace_latest, accumulate };

struct RunConfig {
  double tau_entity = 1000.0;
  uint64_t tau_cooc = 1;
  uint64_t window_size = 1000;
  int top_k = 3;
  int max_sentences = 10;
  int max_tokens_per_step = 128;
  int max_regen_per_sentence = 1;
  ContextPolicy context_policy = ContextPolicy::replace_latest;
  std::string few_shot_block;     // empty = default demonstration
  std::string instruction_block;  // empty = default instruction
};

struct TriggerDecision {
  bool triggered = false;
  Stage stage = Stage::pre_generation;
  double statistic = 0.0;  // avg entity freq or min cooc
  double threshold = 0.0;
  std::optional<Triplet> witness;  // minimizing triplet, runtime triggers only
};

struct SentenceRecord {
  std::string text;  // accepted sentence
  std::vector<TriggerDecision> decisions;
  int regenerations = 0;
  bool verify_skipped = false;  // extractor failed; sentence accepted as-is
};

struct GenerationTrace {
  std::string id;
  std::string question;
  TriggerDecision pre_decision;
  std::vector<SentenceRecord> sentences;
  std::vector<RetrievalEvent> retrieval_events;
  uint64_t generated_token_count = 0;
  uint64_t prompt_token_count = 0;  // gateway-tokenizer estimate, informational
  int llm_call_count = 0;
  int retrieval_count = 0;
  std::string final_text;
  bool failed = false;
  std::string failure_reason;
};

TriggerDecision pre_generation_assess(const CorpusStats& stats,
                                      const EntitySet& entities,
                                      const RunConfig& config);

TriggerDecision verify_sentence(const CorpusStats& stats, const TripletSet& triplets,
                                const RunConfig& config);

// head + " " + relation; the (possibly hallucinated) tail is excluded.
std::string formulate_query(const Triplet& witness);

// Splits off the first sentence of a generation chunk. Terminators are
// ". ", "! ", "? " or end-of-string, with guards for single-letter initials
// and Mr./Dr./St. abbreviations.
std::pair<std::string, std::string> segment_first_sentence(const std::string& raw);

GenerationTrace run_question(const std::string& question, const CorpusStats& stats,
                             const RetrievalCorpus* retrieval_corpus,
                             GeneratorBackend& generator,
                             const TripletExtractor& extractor,
                             const RunConfig& config);

// Trace wire format (one JSON object per question; eval consumes this).
nlohmann::json trace_to_json(const GenerationTrace& trace);
GenerationTrace trace_from_json(const nlohmann::json& j);

}  // namespace corag
