#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <random>

#include "corag/suffix_index.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace corag;

namespace {

CorpusIndex index_of(const std::vector<DocumentRecord>& docs, uint64_t window) {
  return CorpusIndex::build(ingest(docs, window).stream);
}

PhraseQuery phrase(std::initializer_list<const char*> toks) {
  PhraseQuery q;
  for (auto t : toks) q.tokens.push_back(t);
  return q;
}

}  // namespace

TEST_CASE("empty corpus: empty suffix array, all freq queries 0") {
  auto idx = index_of({}, 1000);
  CHECK(idx.suffix_array().empty());
  CHECK(idx.freq(phrase({"anything"})) == 0);
  CHECK(idx.cooc(phrase({"a"}), phrase({"b"})) == 0);
}

TEST_CASE("suffix array of [b, a, b]") {
  auto idx = index_of({{"d", "b a b"}}, 1000);
  CHECK(idx.suffix_array() == std::vector<uint64_t>{1, 2, 0});
}

TEST_CASE("freq: absent phrase is 0") {
  auto idx = index_of({{"d", "the cat sat"}}, 1000);
  CHECK(idx.freq(phrase({"zzz-absent"})) == 0);
}

TEST_CASE("freq: [the cat sat the cat] / [the cat] = 2") {
  auto idx = index_of({{"d", "the cat sat the cat"}}, 1000);
  CHECK(idx.freq(phrase({"the", "cat"})) == 2);
}

TEST_CASE("freq counts overlapping occurrences") {
  auto idx = index_of({{"d", "a a a"}}, 1000);
  CHECK(idx.freq(phrase({"a", "a"})) == 2);
}

TEST_CASE("freq rejects the empty phrase") {
  auto idx = index_of({{"d", "a"}}, 1000);
  CHECK_THROWS_AS(idx.freq(PhraseQuery{}), std::invalid_argument);
  CHECK_THROWS_AS(idx.cooc(PhraseQuery{}, phrase({"a"})), std::invalid_argument);
}

TEST_CASE("cooc: absent head gives 0") {
  auto idx = index_of({{"d", "h x t y"}}, 4);
  CHECK(idx.cooc(phrase({"missing"}), phrase({"t"})) == 0);
}

TEST_CASE("cooc: window enumeration example") {
  // windows: [h x t y], [h z] -> only the first holds both h and t
  auto idx = index_of({{"d", "h x t y h z"}}, 4);
  CHECK(idx.cooc(phrase({"h"}), phrase({"t"})) == 1);
}

TEST_CASE("cooc counts windows, not occurrence pairs") {
  auto idx = index_of({{"d", "h h t t"}}, 4);
  CHECK(idx.cooc(phrase({"h"}), phrase({"t"})) == 1);
}

TEST_CASE("cooc requires the full phrase inside one window") {
  // "p q" straddles the boundary between windows [a p] and [q b]
  auto idx = index_of({{"d", "a p q b"}}, 2);
  CHECK(idx.freq(phrase({"p", "q"})) == 1);
  CHECK(idx.cooc(phrase({"p", "q"}), phrase({"a"})) == 0);
}

TEST_CASE("cooc is symmetric on random corpora") {
  std::mt19937_64 rng(2024);
  for (int iter = 0; iter < 100; ++iter) {
    auto docs = oracles::random_corpus(rng, 300, 6);
    std::uniform_int_distribution<uint64_t> wdist(1, 32);
    auto idx = CorpusIndex::build(ingest(docs, wdist(rng)).stream);
    auto h = PhraseQuery{oracles::random_phrase(rng, 6, 3)};
    auto t = PhraseQuery{oracles::random_phrase(rng, 6, 3)};
    CHECK(idx.cooc(h, t) == idx.cooc(t, h));
  }
}

TEST_CASE("freq and cooc match the brute-force oracles") {
  std::mt19937_64 rng(99);
  for (int iter = 0; iter < 40; ++iter) {
    auto docs = oracles::random_corpus(rng, 1000, 8);
    std::uniform_int_distribution<uint64_t> wdist(1, 48);
    auto stream = ingest(docs, wdist(rng)).stream;
    auto idx = CorpusIndex::build(stream);
    for (int q = 0; q < 25; ++q) {
      auto p = oracles::random_phrase(rng, 8, 4);
      CHECK(idx.freq(PhraseQuery{p}) == oracles::naive_freq(stream.tokens(), p));
      auto t = oracles::random_phrase(rng, 8, 4);
      CHECK(idx.cooc(PhraseQuery{p}, PhraseQuery{t}) ==
            oracles::enumerate_cooc(stream, p, t));
    }
  }
}

TEST_CASE("avg_entity_freq is the arithmetic mean") {
  auto idx = index_of({{"d", "a a b b b b c"}}, 1000);
  // freqs: a=2, b=4
  CHECK(idx.avg_entity_freq({phrase({"a"}), phrase({"b"})}) == doctest::Approx(3.0));
  CHECK(idx.avg_entity_freq({phrase({"zz"}), phrase({"yy"})}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(idx.avg_entity_freq({}), std::invalid_argument);
}

TEST_CASE("appending a document never decreases freq or cooc") {
  std::mt19937_64 rng(31);
  for (int iter = 0; iter < 30; ++iter) {
    auto docs = oracles::random_corpus(rng, 200, 4);
    auto idx1 = CorpusIndex::build(ingest(docs, 8).stream);
    auto extra = oracles::random_corpus(rng, 100, 4);
    extra[0].doc_id = "appended";
    docs.push_back(extra[0]);
    auto idx2 = CorpusIndex::build(ingest(docs, 8).stream);
    auto p = PhraseQuery{oracles::random_phrase(rng, 4, 3)};
    auto t = PhraseQuery{oracles::random_phrase(rng, 4, 3)};
    CHECK(idx2.freq(p) >= idx1.freq(p));
    CHECK(idx2.cooc(p, t) >= idx1.cooc(p, t));
  }
}

TEST_CASE("save/load round-trip answers queries identically") {
  std::mt19937_64 rng(555);
  auto docs = oracles::random_corpus(rng, 2000, 10);
  auto idx = CorpusIndex::build(ingest(docs, 25).stream);
  auto path = std::filesystem::temp_directory_path() / "corag_roundtrip.idx";
  idx.save(path);
  auto loaded = CorpusIndex::load(path);
  CHECK(loaded.stream().token_count() == idx.stream().token_count());
  CHECK(loaded.stream().window_size() == idx.stream().window_size());
  for (int q = 0; q < 1000; ++q) {
    auto p = PhraseQuery{oracles::random_phrase(rng, 10, 4)};
    auto t = PhraseQuery{oracles::random_phrase(rng, 10, 4)};
    CHECK(loaded.freq(p) == idx.freq(p));
    CHECK(loaded.cooc(p, t) == idx.cooc(p, t));
  }
  std::filesystem::remove(path);
}

TEST_CASE("load failures are distinct") {
  auto dir = std::filesystem::temp_directory_path();
  auto path = dir / "corag_load_errors.idx";
  auto idx = index_of({{"d", "a b c d e f"}}, 3);
  idx.save(path);

  SUBCASE("bad magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
    f.close();
    CHECK_THROWS_AS(CorpusIndex::load(path), IndexMagicError);
  }
  SUBCASE("version mismatch") {
    // version is the u32 right after the 8-byte magic
    std::ifstream in(path, std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    in.close();
    data[8] = char(99);
    std::ofstream out(path, std::ios::binary);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.close();
    CHECK_THROWS_AS(CorpusIndex::load(path), IndexVersionError);
  }
  SUBCASE("truncated") {
    std::ifstream in(path, std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(path, std::ios::binary);
    out.write(data.data(), static_cast<std::streamsize>(data.size() / 2));
    out.close();
    CHECK_THROWS_AS(CorpusIndex::load(path), IndexTruncatedError);
  }
  SUBCASE("checksum failure") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);  // flip a payload byte, leave the stored checksum alone
    char b;
    f.seekg(40);
    f.read(&b, 1);
    f.seekp(40);
    b = static_cast<char>(b ^ 0x5A);
    f.write(&b, 1);
    f.close();
    CHECK_THROWS_AS(CorpusIndex::load(path), IndexChecksumError);
  }
  std::filesystem::remove(path);
}
