#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace corag {

class GeneratorBackend;

// Ordered set of entity surface strings, in question appearance order.
struct EntitySet {
  std::vector<std::string> entities;
};

struct Triplet {
  std::string head;
  std::string relation;
  std::optional<std::string> tail;  // absent for partial (question) triplets

  bool is_full() const { return tail.has_value(); }
};

struct TripletSet {
  std::vector<Triplet> triplets;
  std::string source_sentence;
};

class ExtractionError : public std::runtime_error {
 public:
  ExtractionError(const std::string& what, std::string sentence)
      : std::runtime_error(what), sentence_(std::move(sentence)) {}
  const std::string& sentence() const { return sentence_; }

 private:
  std::string sentence_;
};

// Capitalized-span heuristic: maximal runs of capitalized words (interior
// connectives of/the/de/von allowed), plus quoted titles and 4-digit years.
EntitySet extract_entities(const std::string& question);

class TripletExtractor {
 public:
  virtual ~TripletExtractor() = default;
  virtual TripletSet extract(const std::string& sentence) const = 0;
};

// Offline default. Pure function of the sentence: reasoning cues ("thus",
// "therefore", "so", "hence") yield an empty set; questions yield partial
// triplets; declaratives pair consecutive entity spans via the text between
// them.
class RuleBasedExtractor : public TripletExtractor {
 public:
  TripletSet extract(const std::string& sentence) const override;
};

// Replays recorded sentence -> TripletSet pairs verbatim. Unknown sentences
// raise ExtractionError.
class FixtureExtractor : public TripletExtractor {
 public:
  explicit FixtureExtractor(const std::filesystem::path& fixture_jsonl);
  TripletSet extract(const std::string& sentence) const override;

  // Falls back to another extractor for sentences outside the fixture.
  void set_fallback(std::shared_ptr<TripletExtractor> fallback);

 private:
  std::vector<std::pair<std::string, TripletSet>> records_;
  std::shared_ptr<TripletExtractor> fallback_;
};

// Prompts a completion backend with few-shot demonstrations and parses the
// reply as a JSON array of [head, relation, tail?] arrays.
class RemoteExtractor : public TripletExtractor {
 public:
  RemoteExtractor(std::shared_ptr<GeneratorBackend> backend, int max_tokens = 256);
  TripletSet extract(const std::string& sentence) const override;

  static std::string build_extraction_prompt(const std::string& sentence);
  static TripletSet parse_reply(const std::string& reply, const std::string& sentence);

 private:
  std::shared_ptr<GeneratorBackend> backend_;
  int max_tokens_;
};

}  // namespace corag
