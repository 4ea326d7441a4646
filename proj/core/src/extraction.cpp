#include "corag/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "corag/gateway.hpp"
#include "corag/tokenizer.hpp"
#include "json.hpp"

namespace corag {

namespace {

const std::unordered_set<std::string> kStopwords = {
    "who",  "what",  "when",   "where", "which",     "why",  "how",  "whom",
    "is",   "are",   "was",    "were",  "did",       "do",   "does", "a",
    "an",   "the",   "in",     "on",    "at",        "to",   "for",  "and",
    "or",   "but",   "if",     "then",  "thus",      "so",   "he",   "she",
    "it",   "they",  "his",    "her",   "its",       "their", "hence",
    "therefore", "please", "answer", "i", "you", "we"};

const std::unordered_set<std::string> kConnectives = {"of", "the", "de", "von"};

const std::unordered_set<std::string> kRelationAux = {
    "was", "is",   "are",  "were", "been", "being", "be", "has", "have",
    "had", "the",  "a",    "an",   "also", "both",  "or", "and", "then",
    "to",  "does", "did",  "do"};

const std::unordered_set<std::string> kReasoningCues = {"thus", "therefore", "so",
                                                        "hence"};

struct Word {
  std::string surface;  // original whitespace-delimited piece
  std::string core;     // edge punctuation stripped, original case
  std::string lower;    // lowercased core
};

std::vector<Word> split_words(const std::string& text) {
  std::vector<Word> words;
  std::istringstream in(text);
  std::string piece;
  while (in >> piece) {
    Word w;
    w.surface = piece;
    // strip edge punctuation codepoints, preserve case
    std::vector<char32_t> cps;
    size_t pos = 0;
    while (pos < piece.size()) cps.push_back(utf8_next(piece, pos));
    size_t b = 0, e = cps.size();
    while (b < e && cp_is_punct(cps[b])) ++b;
    while (e > b && cp_is_punct(cps[e - 1])) --e;
    for (size_t i = b; i < e; ++i) utf8_append(w.core, cps[i]);
    for (size_t i = b; i < e; ++i) utf8_append(w.lower, cp_tolower(cps[i]));
    words.push_back(std::move(w));
  }
  return words;
}

bool is_capitalized(const Word& w) {
  if (w.core.empty()) return false;
  size_t pos = 0;
  char32_t cp = utf8_next(w.core, pos);
  return cp_tolower(cp) != cp;
}

bool is_year(const Word& w) {
  return w.core.size() == 4 &&
         std::all_of(w.core.begin(), w.core.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

bool starts_with_digit(const Word& w) {
  return !w.core.empty() && std::isdigit(static_cast<unsigned char>(w.core[0]));
}

// Strong words can open or extend a span; connectives only join strong words.
bool is_strong(const Word& w) {
  if (w.core.empty()) return false;
  if (starts_with_digit(w)) return true;
  return is_capitalized(w) && kStopwords.count(w.lower) == 0 &&
         kConnectives.count(w.lower) == 0;
}

std::string trim_span_surface(const std::vector<Word>& words, size_t begin,
                              size_t end) {
  std::string out;
  for (size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(' ');
    std::string piece = words[i].surface;
    if (i == begin) {
      while (!piece.empty() && (piece.front() == '\'' || piece.front() == '"'))
        piece.erase(piece.begin());
      // strip a leading curly quote
      for (const char* q : {"“", "‘"}) {
        if (piece.rfind(q, 0) == 0) piece.erase(0, 3);
      }
    }
    if (i + 1 == end) {
      auto strip_tail = [&](std::string_view suffix) {
        if (piece.size() >= suffix.size() &&
            piece.compare(piece.size() - suffix.size(), suffix.size(), suffix) == 0)
          piece.erase(piece.size() - suffix.size());
      };
      while (!piece.empty() &&
             std::string(".,;:!?'\"").find(piece.back()) != std::string::npos)
        piece.pop_back();
      strip_tail("”");
      strip_tail("’");
      strip_tail("'s");
      strip_tail("’s");
      while (!piece.empty() &&
             std::string(".,;:!?'\"").find(piece.back()) != std::string::npos)
        piece.pop_back();
    }
    out += piece;
  }
  return out;
}

struct Span {
  size_t begin;
  size_t end;  // word index range [begin, end)
  std::string surface;
};

std::vector<Span> entity_spans(const std::vector<Word>& words) {
  std::vector<Span> spans;
  size_t i = 0;
  while (i < words.size()) {
    if (!is_strong(words[i])) {
      ++i;
      continue;
    }
    size_t begin = i;
    size_t end = i + 1;
    while (end < words.size()) {
      if (is_strong(words[end])) {
        ++end;
        continue;
      }
      // a run of connectives may join two strong words
      size_t probe = end;
      while (probe < words.size() && kConnectives.count(words[probe].lower) > 0)
        ++probe;
      if (probe > end && probe < words.size() && is_strong(words[probe])) {
        end = probe + 1;
      } else {
        break;
      }
    }
    // a span must carry a capitalized word or be a standalone year
    bool has_cap = false;
    for (size_t k = begin; k < end; ++k)
      if (is_capitalized(words[k])) has_cap = true;
    bool year_only = (end == begin + 1) && is_year(words[begin]);
    if (has_cap || year_only) {
      std::string surface = trim_span_surface(words, begin, end);
      if (!surface.empty()) spans.push_back({begin, end, std::move(surface)});
    }
    i = end;
  }
  return spans;
}

std::vector<std::string> quoted_titles(const std::string& text) {
  std::vector<std::string> out;
  // straight double quotes
  size_t pos = 0;
  while (true) {
    size_t open = text.find('"', pos);
    if (open == std::string::npos) break;
    size_t close = text.find('"', open + 1);
    if (close == std::string::npos) break;
    std::string inner = text.substr(open + 1, close - open - 1);
    if (!inner.empty()) out.push_back(inner);
    pos = close + 1;
  }
  // curly quotes
  pos = 0;
  while (true) {
    size_t open = text.find("“", pos);
    if (open == std::string::npos) break;
    size_t close = text.find("”", open + 3);
    if (close == std::string::npos) break;
    std::string inner = text.substr(open + 3, close - open - 3);
    if (!inner.empty()) out.push_back(inner);
    pos = close + 3;
  }
  return out;
}

std::string relation_from_words(const std::vector<Word>& words, size_t begin,
                                size_t end) {
  std::vector<std::string> rel;
  for (size_t i = begin; i < end; ++i) {
    if (!words[i].lower.empty()) rel.push_back(words[i].lower);
  }
  while (!rel.empty() && kRelationAux.count(rel.front()) > 0) rel.erase(rel.begin());
  while (!rel.empty() && kRelationAux.count(rel.back()) > 0) rel.pop_back();
  return join_tokens(rel);
}

}  // namespace

EntitySet extract_entities(const std::string& question) {
  auto words = split_words(question);
  auto spans = entity_spans(words);

  EntitySet set;
  std::unordered_set<std::string> seen;
  auto add = [&](const std::string& surface) {
    std::string key = join_tokens(tokenize(surface));
    if (key.empty() || !seen.insert(key).second) return;
    set.entities.push_back(surface);
  };
  for (const auto& s : spans) add(s.surface);
  for (const auto& q : quoted_titles(question)) add(q);
  return set;
}

TripletSet RuleBasedExtractor::extract(const std::string& sentence) const {
  TripletSet out;
  out.source_sentence = sentence;
  auto norm = tokenize(sentence);
  if (norm.empty()) return out;
  if (kReasoningCues.count(norm.front()) > 0) return out;

  auto words = split_words(sentence);
  auto spans = entity_spans(words);
  if (spans.empty()) return out;

  std::string trimmed = sentence;
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
    trimmed.pop_back();
  bool is_question = !trimmed.empty() && trimmed.back() == '?';

  if (is_question) {
    for (size_t i = 0; i < spans.size(); ++i) {
      size_t rel_end = (i + 1 < spans.size()) ? spans[i + 1].begin : words.size();
      std::string rel = relation_from_words(words, spans[i].end, rel_end);
      if (rel.empty()) rel = relation_from_words(words, 0, spans.front().begin);
      if (rel.empty()) rel = "related to";
      out.triplets.push_back({spans[i].surface, rel, std::nullopt});
    }
    return out;
  }

  for (size_t i = 0; i + 1 < spans.size(); ++i) {
    std::string rel = relation_from_words(words, spans[i].end, spans[i + 1].begin);
    if (rel.empty()) continue;
    out.triplets.push_back({spans[i].surface, rel, spans[i + 1].surface});
  }
  return out;
}

namespace {

TripletSet triplets_from_json(const nlohmann::json& arr, const std::string& sentence) {
  TripletSet set;
  set.source_sentence = sentence;
  if (!arr.is_array())
    throw ExtractionError("triplet payload is not an array", sentence);
  for (const auto& item : arr) {
    if (!item.is_array() || item.size() < 2 || item.size() > 3)
      throw ExtractionError("triplet entry must be [head, relation, tail?]", sentence);
    Triplet t;
    t.head = item[0].get<std::string>();
    t.relation = item[1].get<std::string>();
    if (item.size() == 3) t.tail = item[2].get<std::string>();
    if (t.head.empty() || t.relation.empty())
      throw ExtractionError("triplet head/relation must be non-empty", sentence);
    set.triplets.push_back(std::move(t));
  }
  return set;
}

}  // namespace

FixtureExtractor::FixtureExtractor(const std::filesystem::path& fixture_jsonl) {
  std::ifstream in(fixture_jsonl);
  if (!in)
    throw std::runtime_error("cannot open fixture file: " + fixture_jsonl.string());
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("sentence") || !j.contains("triplets"))
      throw std::runtime_error("malformed fixture record at line " +
                               std::to_string(line_no));
    std::string sentence = j["sentence"].get<std::string>();
    records_.emplace_back(sentence, triplets_from_json(j["triplets"], sentence));
  }
}

void FixtureExtractor::set_fallback(std::shared_ptr<TripletExtractor> fallback) {
  fallback_ = std::move(fallback);
}

TripletSet FixtureExtractor::extract(const std::string& sentence) const {
  for (const auto& [recorded, set] : records_) {
    if (recorded == sentence) return set;
  }
  if (fallback_) return fallback_->extract(sentence);
  throw ExtractionError("sentence not in fixture", sentence);
}

RemoteExtractor::RemoteExtractor(std::shared_ptr<GeneratorBackend> backend,
                                 int max_tokens)
    : backend_(std::move(backend)), max_tokens_(max_tokens) {}

std::string RemoteExtractor::build_extraction_prompt(const std::string& sentence) {
  // Few-shot demonstrations covering declaratives, questions and reasoning
  // conclusions; the reply must be a JSON array of [head, relation, tail?].
  static const char* kShots =
      "Extract knowledge triplets from the sentence. Output a JSON array of "
      "[head, relation, tail] arrays. For questions, omit the unknown tail. "
      "For reasoning conclusions, output [].\n\n"
      "Sentence: Kumbasaram was released in 2017.\n"
      "Triplets: [[\"Kumbasaram\", \"released in\", \"2017\"]]\n\n"
      "Sentence: Beowulf & Grendel was directed by Sturla Gunnarsson.\n"
      "Triplets: [[\"Beowulf & Grendel\", \"directed by\", \"Sturla Gunnarsson\"]]\n\n"
      "Sentence: Coulson Wallop's father, Nigel Wallop, studied at Eton College.\n"
      "Triplets: [[\"Coulson Wallop\", \"father\", \"Nigel Wallop\"], "
      "[\"Nigel Wallop\", \"studied at\", \"Eton College\"]]\n\n"
      "Sentence: Which film came out first, Kumbasaram or Mystery Of The 13th "
      "Guest?\n"
      "Triplets: [[\"Kumbasaram\", \"came out\"], [\"Mystery of the 13th Guest\", "
      "\"came out\"]]\n\n"
      "Sentence: Where did Diane Meyer Simon's husband graduate from?\n"
      "Triplets: [[\"Diane Meyer Simon\", \"husband\"]]\n\n"
      "Sentence: Thus, Kumbasaram came out first.\n"
      "Triplets: []\n\n";
  return std::string(kShots) + "Sentence: " + sentence + "\nTriplets:";
}

TripletSet RemoteExtractor::parse_reply(const std::string& reply,
                                        const std::string& sentence) {
  size_t open = reply.find('[');
  if (open == std::string::npos)
    throw ExtractionError("no JSON array in extractor reply", sentence);
  int depth = 0;
  size_t close = std::string::npos;
  for (size_t i = open; i < reply.size(); ++i) {
    if (reply[i] == '[') ++depth;
    if (reply[i] == ']' && --depth == 0) {
      close = i;
      break;
    }
  }
  if (close == std::string::npos)
    throw ExtractionError("unterminated JSON array in extractor reply", sentence);
  nlohmann::json arr =
      nlohmann::json::parse(reply.substr(open, close - open + 1), nullptr, false);
  if (arr.is_discarded())
    throw ExtractionError("malformed JSON in extractor reply", sentence);
  return triplets_from_json(arr, sentence);
}

TripletSet RemoteExtractor::extract(const std::string& sentence) const {
  Completion c;
  try {
    c = backend_->generate(build_extraction_prompt(sentence), max_tokens_);
  } catch (const std::exception& e) {
    throw ExtractionError(std::string("extractor backend failed: ") + e.what(),
                          sentence);
  }
  return parse_reply(c.text, sentence);
}

}  // namespace corag
