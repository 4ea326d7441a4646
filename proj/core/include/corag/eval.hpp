#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "corag/controller.hpp"
#include "corag/stats.hpp"
#include "json.hpp"

namespace corag {

struct QASample {
  std::string id;
  std::string question;
  std::vector<std::string> gold_answers;
};

// Table-style frequency bins over floor(avg entity freq).
extern const std::vector<std::string> kFrequencyBinLabels;

std::string bin_of(double avg_freq);

struct BinStats {
  uint64_t count = 0;
  double em = 0.0;
  double avg_retrievals = 0.0;
};

struct EvalReport {
  double em = 0.0;
  double f1 = 0.0;
  double avg_retrievals = 0.0;
  double avg_llm_calls = 0.0;
  double avg_tokens = 0.0;  // completion tokens only
  uint64_t total = 0;
  std::map<std::string, BinStats> per_bin;
};

// Substring after the last "so the answer is" (case-insensitive), trailing
// period stripped; whole final_text when the phrase is absent.
std::string extract_final_answer(const GenerationTrace& trace);

// lowercase, strip punctuation, drop articles, whitespace-split
std::vector<std::string> normalize_answer(const std::string& text);

int exact_match(const std::string& pred, const std::vector<std::string>& golds);
double token_f1(const std::string& pred, const std::vector<std::string>& golds);

EvalReport aggregate(const std::vector<QASample>& samples,
                     const std::vector<GenerationTrace>& traces,
                     const CorpusStats& stats);

nlohmann::json report_to_json(const EvalReport& report);

std::vector<QASample> read_jsonl_dataset(const std::filesystem::path& path);

}  // namespace corag
