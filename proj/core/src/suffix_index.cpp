#include "corag/suffix_index.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

#include "corag/tokenizer.hpp"

namespace corag {

PhraseQuery PhraseQuery::from_text(std::string_view text) {
  return PhraseQuery{tokenize(text)};
}

double CorpusStats::avg_entity_freq(const std::vector<PhraseQuery>& entities) const {
  if (entities.empty()) throw std::invalid_argument("entity set must be non-empty");
  double sum = 0.0;
  for (const auto& e : entities) sum += static_cast<double>(freq(e));
  return sum / static_cast<double>(entities.size());
}

namespace {

// Manber-Myers rank doubling with counting sort per pass: O(n log n).
std::vector<uint64_t> build_suffix_array(const std::vector<uint32_t>& ids) {
  const size_t n = ids.size();
  std::vector<uint64_t> sa(n), tmp(n);
  std::vector<uint64_t> rank(n), new_rank(n);
  if (n == 0) return sa;
  for (size_t i = 0; i < n; ++i) rank[i] = ids[i];

  // initial order: counting sort by single token
  std::vector<uint64_t> count;
  {
    uint64_t max_rank = *std::max_element(rank.begin(), rank.end());
    count.assign(max_rank + 2, 0);
    for (size_t i = 0; i < n; ++i) ++count[rank[i] + 1];
    for (size_t i = 1; i < count.size(); ++i) count[i] += count[i - 1];
    for (size_t i = 0; i < n; ++i) sa[count[rank[i]]++] = i;
  }
  if (n == 1) return sa;
  for (size_t k = 1;; k <<= 1) {
    // sort by second key: suffixes with i + k >= n come first
    size_t p = 0;
    for (size_t i = n - std::min(k, n); i < n; ++i) tmp[p++] = i;
    for (size_t i = 0; i < n; ++i) {
      if (sa[i] >= k) tmp[p++] = sa[i] - k;
    }
    // stable counting sort by first key
    uint64_t max_rank = *std::max_element(rank.begin(), rank.end());
    count.assign(max_rank + 2, 0);
    for (size_t i = 0; i < n; ++i) ++count[rank[i] + 1];
    for (size_t i = 1; i < count.size(); ++i) count[i] += count[i - 1];
    for (size_t i = 0; i < n; ++i) sa[count[rank[tmp[i]]]++] = tmp[i];
    // re-rank
    new_rank[sa[0]] = 0;
    bool all_distinct = true;
    for (size_t i = 1; i < n; ++i) {
      uint64_t a = sa[i - 1], b = sa[i];
      bool same = rank[a] == rank[b] &&
                  ((a + k < n && b + k < n) ? rank[a + k] == rank[b + k]
                                            : (a + k >= n && b + k >= n));
      new_rank[b] = new_rank[a] + (same ? 0 : 1);
      if (same) all_distinct = false;
    }
    rank.swap(new_rank);
    if (all_distinct || rank[sa[n - 1]] == n - 1) break;
  }
  return sa;
}

uint64_t fnv1a64(const void* data, size_t len, uint64_t hash = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    hash ^= p[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

constexpr char kMagic[8] = {'C', 'R', 'G', 'I', 'D', 'X', '0', '\n'};

}  // namespace

CorpusIndex CorpusIndex::build(TokenStream stream) {
  CorpusIndex idx;
  idx.stream_ = std::move(stream);
  const auto& toks = idx.stream_.tokens();

  idx.vocab_.assign(toks.begin(), toks.end());
  std::sort(idx.vocab_.begin(), idx.vocab_.end());
  idx.vocab_.erase(std::unique(idx.vocab_.begin(), idx.vocab_.end()),
                   idx.vocab_.end());

  idx.token_ids_.resize(toks.size());
  for (size_t i = 0; i < toks.size(); ++i) {
    auto it = std::lower_bound(idx.vocab_.begin(), idx.vocab_.end(), toks[i]);
    idx.token_ids_[i] = static_cast<uint32_t>(it - idx.vocab_.begin());
  }

  idx.suffix_array_ = build_suffix_array(idx.token_ids_);
  return idx;
}

bool CorpusIndex::phrase_ids(const PhraseQuery& phrase,
                             std::vector<uint32_t>& out) const {
  out.clear();
  out.reserve(phrase.tokens.size());
  for (const auto& t : phrase.tokens) {
    auto it = std::lower_bound(vocab_.begin(), vocab_.end(), t);
    if (it == vocab_.end() || *it != t) return false;
    out.push_back(static_cast<uint32_t>(it - vocab_.begin()));
  }
  return true;
}

std::pair<uint64_t, uint64_t> CorpusIndex::sa_range(
    const std::vector<uint32_t>& ids) const {
  const size_t n = token_ids_.size();
  const size_t m = ids.size();
  // suffix-vs-phrase prefix comparison: <0 below, 0 starts-with, >0 above
  auto cmp = [&](uint64_t suffix) {
    for (size_t j = 0; j < m; ++j) {
      if (suffix + j >= n) return -1;  // suffix is a proper prefix: sorts below
      if (token_ids_[suffix + j] < ids[j]) return -1;
      if (token_ids_[suffix + j] > ids[j]) return 1;
    }
    return 0;
  };
  uint64_t lo = 0, hi = suffix_array_.size();
  // lower bound
  {
    uint64_t a = lo, b = hi;
    while (a < b) {
      uint64_t mid = a + (b - a) / 2;
      if (cmp(suffix_array_[mid]) < 0)
        a = mid + 1;
      else
        b = mid;
    }
    lo = a;
  }
  // upper bound
  {
    uint64_t a = lo, b = suffix_array_.size();
    while (a < b) {
      uint64_t mid = a + (b - a) / 2;
      if (cmp(suffix_array_[mid]) <= 0)
        a = mid + 1;
      else
        b = mid;
    }
    hi = a;
  }
  return {lo, hi};
}

uint64_t CorpusIndex::freq(const PhraseQuery& phrase) const {
  if (phrase.empty()) throw std::invalid_argument("phrase must be non-empty");
  std::vector<uint32_t> ids;
  if (!phrase_ids(phrase, ids)) return 0;
  auto [lo, hi] = sa_range(ids);
  return hi - lo;
}

bool CorpusIndex::occurrence_in_window(uint64_t offset, size_t len) const {
  auto [begin, end] = stream_.window_span(stream_.window_of(offset));
  (void)begin;
  return offset + len <= end;
}

bool CorpusIndex::window_contains(uint64_t win_begin, uint64_t win_end,
                                  const std::vector<uint32_t>& ids) const {
  const size_t m = ids.size();
  if (win_end - win_begin < m) return false;
  for (uint64_t o = win_begin; o + m <= win_end; ++o) {
    if (std::equal(ids.begin(), ids.end(), token_ids_.begin() + o)) return true;
  }
  return false;
}

uint64_t CorpusIndex::cooc(const PhraseQuery& head, const PhraseQuery& tail) const {
  if (head.empty() || tail.empty())
    throw std::invalid_argument("phrases must be non-empty");
  std::vector<uint32_t> h_ids, t_ids;
  if (!phrase_ids(head, h_ids) || !phrase_ids(tail, t_ids)) return 0;
  auto [h_lo, h_hi] = sa_range(h_ids);
  auto [t_lo, t_hi] = sa_range(t_ids);
  uint64_t f_h = h_hi - h_lo, f_t = t_hi - t_lo;
  if (f_h == 0 || f_t == 0) return 0;

  auto windows_of = [&](uint64_t lo, uint64_t hi, size_t len) {
    std::vector<uint64_t> wins;
    wins.reserve(hi - lo);
    for (uint64_t i = lo; i < hi; ++i) {
      uint64_t off = suffix_array_[i];
      if (occurrence_in_window(off, len)) wins.push_back(stream_.window_of(off));
    }
    std::sort(wins.begin(), wins.end());
    wins.erase(std::unique(wins.begin(), wins.end()), wins.end());
    return wins;
  };

  // Cost model: probing each candidate window of the rarer phrase costs up to
  // window_size token comparisons; enumerating both offset sets costs f_h+f_t.
  uint64_t rare_f = std::min(f_h, f_t);
  if (rare_f * stream_.window_size() <= f_h + f_t) {
    bool head_rare = f_h <= f_t;
    auto wins = windows_of(head_rare ? h_lo : t_lo, head_rare ? h_hi : t_hi,
                           head_rare ? h_ids.size() : t_ids.size());
    const auto& other = head_rare ? t_ids : h_ids;
    uint64_t count = 0;
    for (uint64_t w : wins) {
      auto [begin, end] = stream_.window_span(w);
      if (window_contains(begin, end, other)) ++count;
    }
    return count;
  }
  auto h_wins = windows_of(h_lo, h_hi, h_ids.size());
  auto t_wins = windows_of(t_lo, t_hi, t_ids.size());
  std::vector<uint64_t> both;
  std::set_intersection(h_wins.begin(), h_wins.end(), t_wins.begin(), t_wins.end(),
                        std::back_inserter(both));
  return both.size();
}

namespace {

struct Writer {
  std::string buf;
  void raw(const void* p, size_t len) {
    buf.append(static_cast<const char*>(p), len);
  }
  template <typename T>
  void num(T v) {
    raw(&v, sizeof(v));
  }
};

struct Reader {
  std::string data;
  size_t pos = 0;
  void raw(void* p, size_t len) {
    if (pos + len > data.size()) throw IndexTruncatedError("index file truncated");
    std::memcpy(p, data.data() + pos, len);
    pos += len;
  }
  template <typename T>
  T num() {
    T v;
    raw(&v, sizeof(v));
    return v;
  }
};

}  // namespace

void CorpusIndex::save(const std::filesystem::path& path) const {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.num<uint32_t>(kFormatVersion);

  Writer payload;
  payload.num<uint64_t>(stream_.window_size());
  payload.num<uint64_t>(stream_.token_count());
  payload.num<uint64_t>(stream_.doc_boundaries().size());
  for (uint64_t b : stream_.doc_boundaries()) payload.num<uint64_t>(b);
  payload.num<uint64_t>(vocab_.size());
  for (const auto& t : vocab_) {
    payload.num<uint32_t>(static_cast<uint32_t>(t.size()));
    payload.raw(t.data(), t.size());
  }
  for (uint32_t id : token_ids_) payload.num<uint32_t>(id);
  for (uint64_t s : suffix_array_) payload.num<uint64_t>(s);

  w.num<uint64_t>(payload.buf.size());
  w.buf += payload.buf;
  uint64_t checksum = fnv1a64(w.buf.data(), w.buf.size());
  w.num<uint64_t>(checksum);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

CorpusIndex CorpusIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IndexLoadError("cannot open index file: " + path.string());
  Reader r;
  r.data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());

  constexpr size_t kHeaderSize = sizeof(kMagic) + sizeof(uint32_t) + sizeof(uint64_t);
  if (r.data.size() < kHeaderSize)
    throw IndexTruncatedError("index file truncated: " + path.string());
  if (std::memcmp(r.data.data(), kMagic, sizeof(kMagic)) != 0)
    throw IndexMagicError("not an index file: " + path.string());

  char magic[8];
  r.raw(magic, sizeof(magic));
  uint32_t version = r.num<uint32_t>();
  if (version != kFormatVersion)
    throw IndexVersionError("index format version " + std::to_string(version) +
                            ", expected " + std::to_string(kFormatVersion));

  uint64_t payload_size = r.num<uint64_t>();
  uint64_t expected_total = kHeaderSize + payload_size + sizeof(uint64_t);
  if (r.data.size() < expected_total)
    throw IndexTruncatedError("index file truncated: " + path.string());
  if (r.data.size() > expected_total)
    throw IndexLoadError("trailing bytes after index payload: " + path.string());

  uint64_t stored_checksum;
  std::memcpy(&stored_checksum, r.data.data() + kHeaderSize + payload_size,
              sizeof(uint64_t));
  uint64_t actual = fnv1a64(r.data.data(), kHeaderSize + payload_size);
  if (actual != stored_checksum)
    throw IndexChecksumError("index checksum mismatch: " + path.string());
  r.data.resize(kHeaderSize + payload_size);

  uint64_t window_size = r.num<uint64_t>();
  uint64_t token_count = r.num<uint64_t>();
  uint64_t boundary_count = r.num<uint64_t>();
  std::vector<uint64_t> boundaries(boundary_count);
  for (auto& b : boundaries) b = r.num<uint64_t>();
  uint64_t vocab_count = r.num<uint64_t>();

  CorpusIndex idx;
  idx.vocab_.resize(vocab_count);
  for (auto& t : idx.vocab_) {
    uint32_t len = r.num<uint32_t>();
    t.resize(len);
    r.raw(t.data(), len);
  }
  idx.token_ids_.resize(token_count);
  for (auto& id : idx.token_ids_) {
    id = r.num<uint32_t>();
    if (id >= vocab_count) throw IndexLoadError("token id out of range");
  }
  idx.suffix_array_.resize(token_count);
  for (auto& s : idx.suffix_array_) s = r.num<uint64_t>();

  std::vector<std::string> tokens(token_count);
  for (uint64_t i = 0; i < token_count; ++i) tokens[i] = idx.vocab_[idx.token_ids_[i]];
  idx.stream_ = TokenStream(std::move(tokens), std::move(boundaries), window_size);
  return idx;
}

}  // namespace corag
