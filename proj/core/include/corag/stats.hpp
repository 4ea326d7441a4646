#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace corag {

// A contiguous sequence of normalized tokens, as produced by tokenize().
struct PhraseQuery {
  std::vector<std::string> tokens;

  static PhraseQuery from_text(std::string_view text);
  bool empty() const { return tokens.empty(); }
};

// Frequency / co-occurrence signal source the trigger logic queries.
// Backed by CorpusIndex in production and by fixed tables in tests.
class CorpusStats {
 public:
  virtual ~CorpusStats() = default;

  // Occurrences of the phrase as a contiguous token run (overlaps counted).
  virtual uint64_t freq(const PhraseQuery& phrase) const = 0;

  // Number of distinct windows containing a full occurrence of both phrases.
  virtual uint64_t cooc(const PhraseQuery& head, const PhraseQuery& tail) const = 0;

  double avg_entity_freq(const std::vector<PhraseQuery>& entities) const;
};

}  // namespace corag
