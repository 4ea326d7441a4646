#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <random>

#include "corag/corpus.hpp"
#include "corag/tokenizer.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace corag;

namespace {

std::string words(int n, const std::string& w = "tok") {
  std::string out;
  for (int i = 0; i < n; ++i) out += w + std::to_string(i) + " ";
  return out;
}

}  // namespace

TEST_CASE("ingest concatenates documents and records boundaries") {
  auto [stream, skipped] =
      ingest({{"a", "one two three"}, {"b", "four five"}}, 1000);
  CHECK(skipped == 0);
  CHECK(stream.token_count() == 5);
  CHECK(stream.doc_boundaries() == std::vector<uint64_t>{0, 3});
}

TEST_CASE("duplicate doc_id is rejected by name") {
  CHECK_THROWS_WITH_AS(ingest({{"x", "a"}, {"x", "b"}}, 10).stream.token_count(),
                       doctest::Contains("x"), IngestError);
}

TEST_CASE("zero-token documents are skipped with a count") {
  auto [stream, skipped] = ingest({{"a", " ... "}, {"b", "word"}, {"c", "\t"}}, 10);
  CHECK(skipped == 2);
  CHECK(stream.document_count() == 1);
  CHECK(stream.token_count() == 1);
}

TEST_CASE("window_of: single short document") {
  auto [stream, _] = ingest({{"a", words(5)}}, 1000);
  CHECK(stream.window_of(3) == 0);
  CHECK(stream.window_count() == 1);
}

TEST_CASE("window_of: 2500-token document, window 1000") {
  auto [stream, _] = ingest({{"a", words(2500)}}, 1000);
  CHECK(stream.window_of(2100) == 2);
  CHECK(stream.window_count() == 3);
  auto [b, e] = stream.window_span(2);
  CHECK(b == 2000);
  CHECK(e == 2500);
}

TEST_CASE("window_of: windows reset at document boundaries") {
  auto [stream, _] = ingest({{"a", "x y z"}, {"b", "p q r"}}, 2);
  // doc a -> windows 0,1 ; doc b -> windows 2,3
  CHECK(stream.window_of(4) == 2);
  CHECK(stream.window_count() == 4);
}

TEST_CASE("window_of rejects out-of-range offsets") {
  auto [stream, _] = ingest({{"a", "x y"}}, 2);
  CHECK_THROWS_AS(stream.window_of(2), std::out_of_range);
}

TEST_CASE("windowing partitions the stream and never crosses documents") {
  std::mt19937_64 rng(77);
  for (int iter = 0; iter < 50; ++iter) {
    auto docs = oracles::random_corpus(rng, 500, 4);
    std::uniform_int_distribution<uint64_t> wdist(1, 64);
    auto [stream, _] = ingest(docs, wdist(rng));
    std::vector<uint64_t> covered(stream.token_count(), 0);
    for (uint64_t w = 0; w < stream.window_count(); ++w) {
      auto [b, e] = stream.window_span(w);
      CHECK(stream.document_of(b) == stream.document_of(e - 1));
      for (uint64_t i = b; i < e; ++i) {
        ++covered[i];
        CHECK(stream.window_of(i) == w);
      }
    }
    for (auto c : covered) CHECK(c == 1);
  }
}

TEST_CASE("ingest is deterministic") {
  std::vector<DocumentRecord> docs = {{"a", "Alpha beta GAMMA."}, {"b", "delta"}};
  auto s1 = ingest(docs, 7).stream;
  auto s2 = ingest(docs, 7).stream;
  CHECK(s1.tokens() == s2.tokens());
  CHECK(s1.doc_boundaries() == s2.doc_boundaries());
}

TEST_CASE("read_jsonl_corpus reports the malformed line") {
  auto path = std::filesystem::temp_directory_path() / "corag_bad_corpus.jsonl";
  {
    std::ofstream out(path);
    out << R"({"id": "a", "text": "fine"})" << "\n";
    out << "not json\n";
  }
  CHECK_THROWS_WITH_AS(read_jsonl_corpus(path), doctest::Contains(":2"),
                       IngestError);
  std::filesystem::remove(path);
}

TEST_CASE("read_jsonl_corpus requires id and text strings") {
  auto path = std::filesystem::temp_directory_path() / "corag_bad_corpus2.jsonl";
  {
    std::ofstream out(path);
    out << R"({"id": 3, "text": "fine"})" << "\n";
  }
  CHECK_THROWS_AS(read_jsonl_corpus(path), IngestError);
  std::filesystem::remove(path);
}
