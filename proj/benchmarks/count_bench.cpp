#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

#include "corag/corpus.hpp"
#include "corag/suffix_index.hpp"
#include "corag/tokenizer.hpp"

namespace {

// Synthetic corpus with a Zipf-ish vocabulary, chunked into 2k-token docs.
corag::CorpusIndex make_index(uint64_t tokens) {
  std::mt19937_64 rng(42);
  const int vocab = 20000;
  std::vector<std::string> words(vocab);
  for (int i = 0; i < vocab; ++i) words[i] = "w" + std::to_string(i);
  std::exponential_distribution<double> zipf(1.0 / 2000.0);

  std::vector<corag::DocumentRecord> docs;
  std::ostringstream doc;
  uint64_t emitted = 0;
  int doc_len = 0, doc_id = 0;
  while (emitted < tokens) {
    int w = static_cast<int>(zipf(rng)) % vocab;
    doc << words[w] << ' ';
    ++emitted;
    if (++doc_len == 2000) {
      docs.push_back({"d" + std::to_string(doc_id++), doc.str()});
      doc.str("");
      doc_len = 0;
    }
  }
  if (doc_len > 0) docs.push_back({"d" + std::to_string(doc_id), doc.str()});
  auto [stream, skipped] = corag::ingest(docs, 1000);
  (void)skipped;
  return corag::CorpusIndex::build(std::move(stream));
}

const corag::CorpusIndex& shared_index() {
  static corag::CorpusIndex idx = make_index(2'000'000);
  return idx;
}

corag::PhraseQuery random_phrase(std::mt19937_64& rng, const corag::CorpusIndex& idx,
                                 int len) {
  const auto& toks = idx.stream().tokens();
  std::uniform_int_distribution<uint64_t> at(0, toks.size() - len);
  uint64_t off = at(rng);
  corag::PhraseQuery q;
  for (int i = 0; i < len; ++i) q.tokens.push_back(toks[off + i]);
  return q;
}

void BM_Freq(benchmark::State& state) {
  const auto& idx = shared_index();
  std::mt19937_64 rng(7);
  for (auto _ : state) {
    auto q = random_phrase(rng, idx, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(idx.freq(q));
  }
}
BENCHMARK(BM_Freq)->Arg(1)->Arg(2)->Arg(3);

void BM_Cooc(benchmark::State& state) {
  const auto& idx = shared_index();
  std::mt19937_64 rng(11);
  for (auto _ : state) {
    auto h = random_phrase(rng, idx, 2);
    auto t = random_phrase(rng, idx, 2);
    benchmark::DoNotOptimize(idx.cooc(h, t));
  }
}
BENCHMARK(BM_Cooc);

void BM_Build(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_index(static_cast<uint64_t>(state.range(0))));
  }
}
BENCHMARK(BM_Build)->Arg(100'000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
