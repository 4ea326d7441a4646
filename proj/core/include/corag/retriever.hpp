#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "corag/corpus.hpp"

namespace corag {

enum class Stage { pre_generation, runtime };

struct RetrievalEvent {
  std::string query;
  std::vector<std::pair<std::string, double>> results;  // (doc_id, score), desc
  Stage stage = Stage::pre_generation;
  int step_index = 0;
};

// Inverted index over the external passage collection, scored with BM25
// (k1 = 1.2, b = 0.75). Immutable after build.
class RetrievalCorpus {
 public:
  static constexpr double kK1 = 1.2;
  static constexpr double kB = 0.75;

  static RetrievalCorpus build(std::vector<DocumentRecord> passages);

  // Top-k by BM25 score, ties broken by ascending doc_id; only passages with
  // nonzero score are returned.
  RetrievalEvent retrieve(const std::string& query, int k) const;

  const std::string& text_of(const std::string& doc_id) const;
  size_t size() const { return passages_.size(); }

 private:
  RetrievalCorpus() = default;

  struct Posting {
    uint32_t doc = 0;
    uint32_t tf = 0;
  };

  std::vector<DocumentRecord> passages_;
  std::map<std::string, size_t> id_to_pos_;
  std::map<std::string, std::vector<Posting>> postings_;
  std::vector<uint32_t> doc_lengths_;
  double avg_doc_length_ = 0.0;
};

}  // namespace corag
