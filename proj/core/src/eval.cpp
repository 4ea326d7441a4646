#include "corag/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "corag/tokenizer.hpp"

namespace corag {

const std::vector<std::string> kFrequencyBinLabels = {
    "0", "1-10", "11-50", "51-100", "101-500", "501-1k", "1k-5k", ">5k"};

std::string bin_of(double avg_freq) {
  if (avg_freq < 0) throw std::invalid_argument("avg_freq must be >= 0");
  auto v = static_cast<uint64_t>(std::floor(avg_freq));
  if (v == 0) return "0";
  if (v <= 10) return "1-10";
  if (v <= 50) return "11-50";
  if (v <= 100) return "51-100";
  if (v <= 500) return "101-500";
  if (v <= 1000) return "501-1k";
  if (v <= 5000) return "1k-5k";
  return ">5k";
}

std::string extract_final_answer(const GenerationTrace& trace) {
  static const std::string kMarker = "so the answer is";
  std::string lower = trace.final_text;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  size_t pos = lower.rfind(kMarker);
  std::string answer = (pos == std::string::npos)
                           ? trace.final_text
                           : trace.final_text.substr(pos + kMarker.size());
  // trim whitespace and a trailing period
  size_t b = answer.find_first_not_of(" \t\n\r");
  size_t e = answer.find_last_not_of(" \t\n\r");
  if (b == std::string::npos) return "";
  answer = answer.substr(b, e - b + 1);
  if (!answer.empty() && answer.back() == '.') answer.pop_back();
  while (!answer.empty() && (answer.back() == ' ' || answer.back() == '\t'))
    answer.pop_back();
  return answer;
}

std::vector<std::string> normalize_answer(const std::string& text) {
  // lowercase and remove punctuation codepoint-wise, then split and drop articles
  std::string cleaned;
  size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp = utf8_next(text, pos);
    cp = cp_tolower(cp);
    if (cp_is_punct(cp)) continue;
    utf8_append(cleaned, cp_is_space(cp) ? U' ' : cp);
  }
  std::vector<std::string> tokens;
  std::string tok;
  auto flush = [&] {
    if (!tok.empty() && tok != "a" && tok != "an" && tok != "the")
      tokens.push_back(tok);
    tok.clear();
  };
  for (char c : cleaned) {
    if (c == ' ')
      flush();
    else
      tok.push_back(c);
  }
  flush();
  return tokens;
}

int exact_match(const std::string& pred, const std::vector<std::string>& golds) {
  if (golds.empty()) throw std::invalid_argument("golds must be non-empty");
  auto p = normalize_answer(pred);
  for (const auto& g : golds) {
    if (p == normalize_answer(g)) return 1;
  }
  return 0;
}

namespace {

double f1_single(const std::vector<std::string>& pred,
                 const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  std::unordered_map<std::string, int> counts;
  for (const auto& t : gold) ++counts[t];
  int overlap = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  double precision = static_cast<double>(overlap) / pred.size();
  double recall = static_cast<double>(overlap) / gold.size();
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double token_f1(const std::string& pred, const std::vector<std::string>& golds) {
  if (golds.empty()) throw std::invalid_argument("golds must be non-empty");
  auto p = normalize_answer(pred);
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, f1_single(p, normalize_answer(g)));
  return best;
}

EvalReport aggregate(const std::vector<QASample>& samples,
                     const std::vector<GenerationTrace>& traces,
                     const CorpusStats& stats) {
  std::unordered_map<std::string, const GenerationTrace*> by_id;
  for (const auto& t : traces) by_id[t.id] = &t;
  std::string missing;
  for (const auto& s : samples) {
    if (by_id.find(s.id) == by_id.end()) missing += (missing.empty() ? "" : ", ") + s.id;
  }
  if (!missing.empty())
    throw std::invalid_argument("no trace for sample ids: " + missing);

  EvalReport report;
  struct BinAcc {
    uint64_t count = 0;
    double em_sum = 0, ret_sum = 0;
  };
  std::map<std::string, BinAcc> bins;
  for (const auto& s : samples) {
    const GenerationTrace& trace = *by_id.at(s.id);
    std::string pred = extract_final_answer(trace);
    int em = exact_match(pred, s.gold_answers);
    double f1 = token_f1(pred, s.gold_answers);
    report.em += em;
    report.f1 += f1;
    report.avg_retrievals += trace.retrieval_count;
    report.avg_llm_calls += trace.llm_call_count;
    report.avg_tokens += static_cast<double>(trace.generated_token_count);

    auto entities = extract_entities(s.question);
    std::vector<PhraseQuery> phrases;
    for (const auto& e : entities.entities) {
      auto p = PhraseQuery::from_text(e);
      if (!p.empty()) phrases.push_back(std::move(p));
    }
    double avg_freq = phrases.empty() ? 0.0 : stats.avg_entity_freq(phrases);
    auto& acc = bins[bin_of(avg_freq)];
    ++acc.count;
    acc.em_sum += em;
    acc.ret_sum += trace.retrieval_count;
  }
  report.total = samples.size();
  if (report.total > 0) {
    double n = static_cast<double>(report.total);
    report.em /= n;
    report.f1 /= n;
    report.avg_retrievals /= n;
    report.avg_llm_calls /= n;
    report.avg_tokens /= n;
  }
  for (const auto& [label, acc] : bins) {
    BinStats b;
    b.count = acc.count;
    b.em = acc.em_sum / acc.count;
    b.avg_retrievals = acc.ret_sum / acc.count;
    report.per_bin[label] = b;
  }
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json bins = nlohmann::json::object();
  for (const auto& label : kFrequencyBinLabels) {
    auto it = report.per_bin.find(label);
    if (it == report.per_bin.end()) continue;
    bins[label] = {{"count", it->second.count},
                   {"em", it->second.em},
                   {"avg_retrievals", it->second.avg_retrievals}};
  }
  return {{"em", report.em},
          {"f1", report.f1},
          {"avg_retrievals", report.avg_retrievals},
          {"avg_llm_calls", report.avg_llm_calls},
          {"avg_tokens", report.avg_tokens},
          {"total", report.total},
          {"per_bin", bins}};
}

std::vector<QASample> read_jsonl_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path.string());
  std::vector<QASample> samples;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("id") || !j.contains("question") ||
        !j.contains("answers") || !j["answers"].is_array() || j["answers"].empty()) {
      throw std::runtime_error("malformed dataset record at " + path.string() + ":" +
                               std::to_string(line_no));
    }
    QASample s;
    s.id = j["id"].get<std::string>();
    s.question = j["question"].get<std::string>();
    for (const auto& a : j["answers"]) s.gold_answers.push_back(a.get<std::string>());
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace corag
