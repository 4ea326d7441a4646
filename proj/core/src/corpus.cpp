#include "corag/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "corag/tokenizer.hpp"
#include "json.hpp"

namespace corag {

TokenStream::TokenStream(std::vector<std::string> tokens,
                         std::vector<uint64_t> doc_boundaries, uint64_t window_size)
    : tokens_(std::move(tokens)),
      doc_boundaries_(std::move(doc_boundaries)),
      window_size_(window_size) {
  if (window_size_ < 1) throw IngestError("window_size must be >= 1");
  if (!doc_boundaries_.empty()) {
    if (doc_boundaries_.front() != 0)
      throw IngestError("doc_boundaries must start at 0");
    for (size_t i = 1; i < doc_boundaries_.size(); ++i) {
      if (doc_boundaries_[i] <= doc_boundaries_[i - 1])
        throw IngestError("doc_boundaries must be strictly increasing");
    }
    if (doc_boundaries_.back() >= tokens_.size())
      throw IngestError("doc_boundary past end of stream");
  }
  window_prefix_.reserve(doc_boundaries_.size() + 1);
  uint64_t acc = 0;
  for (size_t d = 0; d < doc_boundaries_.size(); ++d) {
    window_prefix_.push_back(acc);
    uint64_t end = (d + 1 < doc_boundaries_.size()) ? doc_boundaries_[d + 1]
                                                    : tokens_.size();
    uint64_t len = end - doc_boundaries_[d];
    acc += (len + window_size_ - 1) / window_size_;
  }
  window_prefix_.push_back(acc);
}

uint64_t TokenStream::window_count() const {
  return window_prefix_.empty() ? 0 : window_prefix_.back();
}

uint64_t TokenStream::document_of(uint64_t token_offset) const {
  if (token_offset >= tokens_.size())
    throw std::out_of_range("token offset out of range");
  auto it = std::upper_bound(doc_boundaries_.begin(), doc_boundaries_.end(),
                             token_offset);
  return static_cast<uint64_t>(it - doc_boundaries_.begin()) - 1;
}

uint64_t TokenStream::window_of(uint64_t token_offset) const {
  uint64_t doc = document_of(token_offset);
  return window_prefix_[doc] + (token_offset - doc_boundaries_[doc]) / window_size_;
}

std::pair<uint64_t, uint64_t> TokenStream::window_span(uint64_t window_id) const {
  if (window_id >= window_count()) throw std::out_of_range("window id out of range");
  auto it = std::upper_bound(window_prefix_.begin(), window_prefix_.end(), window_id);
  uint64_t doc = static_cast<uint64_t>(it - window_prefix_.begin()) - 1;
  uint64_t doc_begin = doc_boundaries_[doc];
  uint64_t doc_end =
      (doc + 1 < doc_boundaries_.size()) ? doc_boundaries_[doc + 1] : tokens_.size();
  uint64_t begin = doc_begin + (window_id - window_prefix_[doc]) * window_size_;
  uint64_t end = std::min(begin + window_size_, doc_end);
  return {begin, end};
}

IngestResult ingest(const std::vector<DocumentRecord>& documents,
                    uint64_t window_size) {
  if (window_size < 1) throw IngestError("window_size must be >= 1");
  std::unordered_set<std::string> seen;
  std::vector<std::string> tokens;
  std::vector<uint64_t> boundaries;
  uint64_t skipped = 0;
  for (const auto& doc : documents) {
    if (!seen.insert(doc.doc_id).second)
      throw IngestError("duplicate doc_id: " + doc.doc_id);
    auto toks = tokenize(doc.text);
    if (toks.empty()) {
      ++skipped;
      continue;
    }
    boundaries.push_back(tokens.size());
    tokens.insert(tokens.end(), std::make_move_iterator(toks.begin()),
                  std::make_move_iterator(toks.end()));
  }
  return {TokenStream(std::move(tokens), std::move(boundaries), window_size), skipped};
}

std::vector<DocumentRecord> read_jsonl_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open corpus file: " + path.string());
  std::vector<DocumentRecord> docs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") ||
        !j.contains("text") || !j["id"].is_string() || !j["text"].is_string()) {
      throw IngestError("malformed corpus record at " + path.string() + ":" +
                        std::to_string(line_no));
    }
    docs.push_back({j["id"].get<std::string>(), j["text"].get<std::string>()});
  }
  return docs;
}

}  // namespace corag
