#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>
#include <vector>

#include "corag/corpus.hpp"
#include "corag/retriever.hpp"

#ifndef CORAG_FIXTURE_DIR
#error "CORAG_FIXTURE_DIR must be defined"
#endif

using namespace corag;

namespace {

RetrievalCorpus corpus_of(std::vector<std::pair<std::string, std::string>> docs) {
  std::vector<DocumentRecord> records;
  for (auto& [id, text] : docs) records.push_back({id, text});
  return RetrievalCorpus::build(std::move(records));
}

}  // namespace

TEST_CASE("single passage with a matching term ranks first") {
  auto c = corpus_of({{"only", "the quick brown fox"}});
  auto event = c.retrieve("brown dog", 3);
  REQUIRE(event.results.size() == 1);
  CHECK(event.results[0].first == "only");
  CHECK(event.results[0].second > 0.0);
}

TEST_CASE("passage with both query terms beats a one-term passage") {
  auto c = corpus_of({
      {"a", "alpha shares one term here today"},
      {"b", "alpha beta together in one passage"},
  });
  auto event = c.retrieve("alpha beta", 2);
  REQUIRE(event.results.size() == 2);
  CHECK(event.results[0].first == "b");
  CHECK(event.results[1].first == "a");
  CHECK(event.results[0].second > event.results[1].second);
}

TEST_CASE("zero-score passages are excluded and ties break by doc id") {
  auto c = corpus_of({
      {"z", "pear pear"},
      {"m", "unrelated words only"},
      {"a", "pear pear"},
  });
  auto event = c.retrieve("pear", 3);
  REQUIRE(event.results.size() == 2);
  // identical texts score identically; ascending doc_id decides
  CHECK(event.results[0].first == "a");
  CHECK(event.results[1].first == "z");
  CHECK(event.results[0].second == doctest::Approx(event.results[1].second));
}

TEST_CASE("scores are non-increasing and capped at k") {
  auto c = corpus_of({
      {"d1", "wolf"},
      {"d2", "wolf wolf"},
      {"d3", "wolf wolf wolf"},
      {"d4", "wolf pack leader"},
      {"d5", "sheep"},
  });
  auto event = c.retrieve("wolf", 3);
  REQUIRE(event.results.size() == 3);
  for (size_t i = 1; i < event.results.size(); ++i)
    CHECK(event.results[i - 1].second >= event.results[i].second);
}

TEST_CASE("single-term ranking is monotone in tf among equal-length docs") {
  auto c = corpus_of({
      {"low", "owl tree tree tree"},
      {"mid", "owl owl tree tree"},
      {"high", "owl owl owl tree"},
  });
  auto event = c.retrieve("owl", 3);
  REQUIRE(event.results.size() == 3);
  CHECK(event.results[0].first == "high");
  CHECK(event.results[1].first == "mid");
  CHECK(event.results[2].first == "low");
}

TEST_CASE("an irrelevant passage does not reorder existing results") {
  std::vector<std::pair<std::string, std::string>> base = {
      {"a", "comet dust tail"},
      {"b", "comet comet orbit"},
      {"c", "meteor shower"},
  };
  auto before = corpus_of(base).retrieve("comet orbit", 3);
  base.push_back({"x", "entirely disjoint vocabulary zzz"});
  auto after = corpus_of(base).retrieve("comet orbit", 3);
  REQUIRE(before.results.size() == after.results.size());
  for (size_t i = 0; i < before.results.size(); ++i)
    CHECK(before.results[i].first == after.results[i].first);
}

TEST_CASE("retrieval is deterministic") {
  auto c = corpus_of({{"a", "sun moon"}, {"b", "moon star"}, {"c", "sun star"}});
  auto e1 = c.retrieve("sun star", 3);
  auto e2 = c.retrieve("sun star", 3);
  REQUIRE(e1.results.size() == e2.results.size());
  for (size_t i = 0; i < e1.results.size(); ++i) {
    CHECK(e1.results[i].first == e2.results[i].first);
    CHECK(e1.results[i].second == e2.results[i].second);
  }
}

TEST_CASE("build rejects an empty collection, retrieve rejects empty queries") {
  CHECK_THROWS(RetrievalCorpus::build({}));
  auto c = corpus_of({{"a", "something"}});
  CHECK_THROWS(c.retrieve("?!.", 3));
  CHECK_THROWS(c.retrieve("something", 0));
}

TEST_CASE("biography passage is retrieved for the head-relation query") {
  auto docs = read_jsonl_corpus(std::string(CORAG_FIXTURE_DIR) +
                                "/casestudy_retrieval.jsonl");
  auto c = RetrievalCorpus::build(std::move(docs));
  auto event = c.retrieve("Xawery Żuławski mother", 3);
  REQUIRE(!event.results.empty());
  bool found = false;
  for (const auto& [id, score] : event.results)
    if (id == "p-zulawski") found = true;
  CHECK(found);
  CHECK(c.text_of("p-zulawski").find("Małgorzata Braunek") != std::string::npos);
}
