#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace corag {

struct DocumentRecord {
  std::string doc_id;
  std::string text;
};

class IngestError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Concatenated token stream over a document collection, chunked into
// non-overlapping windows of at most window_size tokens. Windows reset at
// each document boundary; the last window of a document may be shorter.
// Immutable after ingest.
class TokenStream {
 public:
  TokenStream() = default;
  TokenStream(std::vector<std::string> tokens, std::vector<uint64_t> doc_boundaries,
              uint64_t window_size);

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<uint64_t>& doc_boundaries() const { return doc_boundaries_; }
  uint64_t window_size() const { return window_size_; }
  uint64_t token_count() const { return tokens_.size(); }
  uint64_t document_count() const { return doc_boundaries_.size(); }
  uint64_t window_count() const;

  // Global index of the window containing the offset. Throws on out-of-range.
  uint64_t window_of(uint64_t token_offset) const;

  // Half-open token range [begin, end) of a window.
  std::pair<uint64_t, uint64_t> window_span(uint64_t window_id) const;

  // Index (into doc_boundaries) of the document containing the offset.
  uint64_t document_of(uint64_t token_offset) const;

 private:
  std::vector<std::string> tokens_;
  std::vector<uint64_t> doc_boundaries_;  // starts at 0, strictly increasing
  uint64_t window_size_ = 1000;
  std::vector<uint64_t> window_prefix_;  // windows before each document
};

struct IngestResult {
  TokenStream stream;
  uint64_t skipped_documents = 0;  // docs that tokenized to nothing
};

IngestResult ingest(const std::vector<DocumentRecord>& documents, uint64_t window_size);

// Newline-delimited JSON records {"id": ..., "text": ...}. Malformed lines
// raise IngestError naming the line number.
std::vector<DocumentRecord> read_jsonl_corpus(const std::filesystem::path& path);

}  // namespace corag
