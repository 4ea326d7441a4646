#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "corag/corpus.hpp"
#include "corag/stats.hpp"

namespace corag {

class IndexLoadError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class IndexMagicError : public IndexLoadError {
  using IndexLoadError::IndexLoadError;
};
class IndexVersionError : public IndexLoadError {
  using IndexLoadError::IndexLoadError;
};
class IndexTruncatedError : public IndexLoadError {
  using IndexLoadError::IndexLoadError;
};
class IndexChecksumError : public IndexLoadError {
  using IndexLoadError::IndexLoadError;
};

// Suffix-array index over a TokenStream. Immutable after build/load; all
// queries are pure and safe for unrestricted concurrent use.
class CorpusIndex : public CorpusStats {
 public:
  static constexpr uint32_t kFormatVersion = 1;

  static CorpusIndex build(TokenStream stream);

  uint64_t freq(const PhraseQuery& phrase) const override;
  uint64_t cooc(const PhraseQuery& head, const PhraseQuery& tail) const override;

  const TokenStream& stream() const { return stream_; }
  const std::vector<uint64_t>& suffix_array() const { return suffix_array_; }

  void save(const std::filesystem::path& path) const;
  static CorpusIndex load(const std::filesystem::path& path);

 private:
  CorpusIndex() = default;

  // [lo, hi) range of suffix_array_ whose suffixes start with the id sequence.
  std::pair<uint64_t, uint64_t> sa_range(const std::vector<uint32_t>& ids) const;

  // Maps phrase tokens to vocabulary ids; false if any token is absent.
  bool phrase_ids(const PhraseQuery& phrase, std::vector<uint32_t>& out) const;

  bool occurrence_in_window(uint64_t offset, size_t len) const;
  bool window_contains(uint64_t win_begin, uint64_t win_end,
                       const std::vector<uint32_t>& ids) const;

  TokenStream stream_;
  std::vector<std::string> vocab_;   // sorted; token id = rank
  std::vector<uint32_t> token_ids_;  // tokens mapped to vocab ids
  std::vector<uint64_t> suffix_array_;
};

}  // namespace corag
