#include "corag/retriever.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "corag/tokenizer.hpp"

namespace corag {

RetrievalCorpus RetrievalCorpus::build(std::vector<DocumentRecord> passages) {
  if (passages.empty())
    throw std::invalid_argument("retrieval corpus must contain at least one passage");
  RetrievalCorpus corpus;
  corpus.passages_ = std::move(passages);
  corpus.doc_lengths_.resize(corpus.passages_.size());
  uint64_t total_len = 0;
  for (size_t d = 0; d < corpus.passages_.size(); ++d) {
    const auto& doc = corpus.passages_[d];
    if (!corpus.id_to_pos_.emplace(doc.doc_id, d).second)
      throw std::invalid_argument("duplicate doc_id: " + doc.doc_id);
    auto toks = tokenize(doc.text);
    corpus.doc_lengths_[d] = static_cast<uint32_t>(toks.size());
    total_len += toks.size();
    std::map<std::string, uint32_t> tf;
    for (auto& t : toks) ++tf[t];
    for (auto& [term, count] : tf)
      corpus.postings_[term].push_back({static_cast<uint32_t>(d), count});
  }
  corpus.avg_doc_length_ =
      static_cast<double>(total_len) / static_cast<double>(corpus.passages_.size());
  return corpus;
}

RetrievalEvent RetrievalCorpus::retrieve(const std::string& query, int k) const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  auto terms_vec = tokenize(query);
  if (terms_vec.empty())
    throw std::invalid_argument("query tokenizes to nothing: " + query);
  std::set<std::string> terms(terms_vec.begin(), terms_vec.end());

  const double n_docs = static_cast<double>(passages_.size());
  std::vector<double> scores(passages_.size(), 0.0);
  for (const auto& term : terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const auto& plist = it->second;
    double df = static_cast<double>(plist.size());
    double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
    for (const auto& p : plist) {
      double tf = static_cast<double>(p.tf);
      double norm_len = doc_lengths_[p.doc] / avg_doc_length_;
      scores[p.doc] += idf * tf * (kK1 + 1.0) /
                       (tf + kK1 * (1.0 - kB + kB * norm_len));
    }
  }

  std::vector<size_t> candidates;
  for (size_t d = 0; d < scores.size(); ++d)
    if (scores[d] > 0.0) candidates.push_back(d);
  std::sort(candidates.begin(), candidates.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return passages_[a].doc_id < passages_[b].doc_id;
  });
  if (candidates.size() > static_cast<size_t>(k)) candidates.resize(k);

  RetrievalEvent event;
  event.query = query;
  for (size_t d : candidates)
    event.results.emplace_back(passages_[d].doc_id, scores[d]);
  return event;
}

const std::string& RetrievalCorpus::text_of(const std::string& doc_id) const {
  auto it = id_to_pos_.find(doc_id);
  if (it == id_to_pos_.end())
    throw std::out_of_range("unknown doc_id: " + doc_id);
  return passages_[it->second].text;
}

}  // namespace corag
