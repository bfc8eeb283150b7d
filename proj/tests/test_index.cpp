#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "support.hpp"
#include "uhd/error.hpp"
#include "uhd/index_io.hpp"
#include "uhd/inverted_index.hpp"

using namespace uhd;

namespace {

struct Corpus {
  std::vector<std::string> ids;
  std::vector<BucketedRepresentation<float>> reps;
};

Corpus random_corpus(Rng& rng, const std::vector<BucketDescriptor>& desc, std::size_t docs, std::size_t nnz) {
  Corpus c;
  for (std::size_t i = 0; i < docs; ++i) {
    c.ids.push_back("doc" + std::to_string(i));
    c.reps.push_back(testing::random_rep(rng, desc, 1 + rng.below(nnz)));
  }
  return c;
}

InvertedIndex index_of(const Corpus& c, const std::vector<BucketDescriptor>& desc) {
  IndexBuilder b(desc);
  for (std::size_t i = 0; i < c.ids.size(); ++i) b.add(c.ids[i], c.reps[i]);
  return std::move(b).finish();
}

bool shares_dim(const BucketedRepresentation<float>& q, const BucketedRepresentation<float>& d) {
  for (std::size_t b = 0; b < q.size(); ++b) {
    if (q[b].descriptor.weight <= 0.0f) continue;
    const auto qs = q[b].vector.support();
    const auto ds = d[b].vector.support();
    std::vector<Dim> both;
    std::set_intersection(qs.begin(), qs.end(), ds.begin(), ds.end(), std::back_inserter(both));
    if (!both.empty()) return true;
  }
  return false;
}

/// Brute force: score every overlapping document with relevance().
std::vector<std::pair<std::size_t, double>> brute_force(const Corpus& c, const BucketedRepresentation<float>& q,
                                                        std::size_t k) {
  std::vector<std::pair<std::size_t, double>> all;
  for (std::size_t i = 0; i < c.reps.size(); ++i) {
    if (shares_dim(q, c.reps[i])) all.push_back({i, relevance(q, c.reps[i])});
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (all.size() > k) all.resize(k);
  return all;
}

const std::vector<BucketDescriptor> kThree{{2, 1, 256, 1.0f}, {4, 1, 256, 1.0f}, {6, 1, 256, 1.0f}};

}  // namespace

TEST_CASE("build_index examples") {
  const auto empty = IndexBuilder().finish();
  CHECK(empty.doc_count() == 0);
  CHECK(empty.posting_count() == 0);

  BucketedRepresentation<float> d;
  d.add({1, 1, 16, 1.0f}, SparseVector<float>(16, {{1, 0.1f}, {3, 0.2f}, {5, 0.3f}, {7, 0.4f}, {9, 0.5f}}));
  IndexBuilder b;
  b.add("only", d);
  b.add("again", d);
  const auto idx = std::move(b).finish();
  CHECK(idx.posting_count() == 10);
  const auto& postings = idx.buckets()[0].postings;
  for (Dim dim : {1u, 3u, 5u, 7u, 9u}) {
    REQUIRE(postings[dim].size() == 2);
    CHECK(postings[dim][0].doc == 0);
    CHECK(postings[dim][1].doc == 1);
  }
  CHECK(postings[0].empty());
}

TEST_CASE("index builder rejects duplicates and mismatched structure") {
  Rng rng(1);
  IndexBuilder b(kThree);
  b.add("a", testing::random_rep(rng, kThree, 3));
  CHECK_THROWS_AS(b.add("a", testing::random_rep(rng, kThree, 3)), DataError);
  CHECK_THROWS_AS(b.add("b", testing::random_rep(rng, {{2, 1, 256, 1.0f}}, 3)), DataError);
}

TEST_CASE("search matches brute-force relevance") {
  Rng rng(2);
  for (int corpus = 0; corpus < 3; ++corpus) {
    const auto c = random_corpus(rng, kThree, 1000, 12);
    const auto idx = index_of(c, kThree);
    for (int qi = 0; qi < 40; ++qi) {
      auto q = testing::random_rep(rng, kThree, 1 + rng.below(12));
      if (qi % 4 == 1) q.set_weights({0.3f, 0.0f, 1.7f});
      const auto got = search(idx, q, 100);
      const auto want = brute_force(c, q, 100);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].ordinal == want[i].first);
        CHECK(got[i].id == c.ids[want[i].first]);
        CHECK(got[i].score == want[i].second);
      }
    }
  }
}

TEST_CASE("search edge cases") {
  Rng rng(3);
  const std::vector<BucketDescriptor> one{{1, 1, 64, 1.0f}};
  Corpus c;
  BucketedRepresentation<float> d1, d2, q, none;
  d1.add(one[0], SparseVector<float>(64, {{1, 0.6f}, {2, 0.8f}}));
  d2.add(one[0], SparseVector<float>(64, {{2, 1.0f}}));
  q.add(one[0], SparseVector<float>(64, {{2, 1.0f}}));
  none.add(one[0], SparseVector<float>(64, {{40, 1.0f}}));
  c.ids = {"d1", "d2"};
  c.reps = {d1, d2};
  const auto idx = index_of(c, one);

  CHECK(search(idx, none, 10).empty());
  const auto all = search(idx, q, 10);
  REQUIRE(all.size() == 2);
  CHECK(all[0].id == "d2");
  CHECK(search(idx, q, 1).size() == 1);
  CHECK_THROWS_AS(search(idx, q, 0), InvalidArgument);
  CHECK_THROWS_AS(search(idx, testing::random_rep(rng, kThree, 2), 5), InvalidArgument);
  CHECK(search(IndexBuilder(one).finish(), q, 5).empty());
}

TEST_CASE("ties keep indexing order") {
  const std::vector<BucketDescriptor> one{{1, 1, 8, 1.0f}};
  BucketedRepresentation<float> d;
  d.add(one[0], SparseVector<float>(8, {{3, 1.0f}}));
  Corpus c{{"z", "a", "m"}, {d, d, d}};
  const auto got = search(index_of(c, one), d, 3);
  REQUIRE(got.size() == 3);
  CHECK(got[0].id == "z");
  CHECK(got[1].id == "a");
  CHECK(got[2].id == "m");
}

TEST_CASE("zero-overlap law") {
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto c = random_corpus(rng, kThree, 200, 6);
    const auto idx = index_of(c, kThree);
    for (int qi = 0; qi < 20; ++qi) {
      const auto q = testing::random_rep(rng, kThree, 1 + rng.below(6));
      for (const auto& r : search(idx, q, 200)) CHECK(shares_dim(q, c.reps[r.ordinal]));
    }
  }
}

TEST_CASE("a zero bucket weight equals dropping the bucket") {
  Rng rng(5);
  const auto c = random_corpus(rng, kThree, 300, 10);
  const auto idx = index_of(c, kThree);
  const std::vector<BucketDescriptor> two{kThree[0], kThree[2]};
  Corpus reduced{c.ids, {}};
  auto drop_middle = [&](const BucketedRepresentation<float>& r) {
    BucketedRepresentation<float> out;
    out.add(r[0].descriptor, r[0].vector);
    out.add(r[2].descriptor, r[2].vector);
    return out;
  };
  for (const auto& r : c.reps) reduced.reps.push_back(drop_middle(r));
  const auto small = index_of(reduced, two);
  for (int qi = 0; qi < 30; ++qi) {
    auto q = testing::random_rep(rng, kThree, 1 + rng.below(10));
    q.set_weights({1.0f, 0.0f, 0.5f});
    auto q2 = drop_middle(q);
    const auto a = search(idx, q, 50);
    const auto b = search(small, q2, 50);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].id == b[i].id);
      CHECK(a[i].score == b[i].score);
    }
  }
}

TEST_CASE("crc64 check value") {
  CHECK(crc64_xz("123456789") == 0x995DC9BBDF1939FAULL);
  CHECK(crc64_xz("") == 0);
}

TEST_CASE("index file round trip and corruption") {
  testing::TempDir dir("index");
  Rng rng(6);
  const auto c = random_corpus(rng, kThree, 150, 8);
  const auto idx = index_of(c, kThree);
  write_index(idx, dir.file("i.uhdi"));
  const auto back = read_index(dir.file("i.uhdi"));
  CHECK(back.doc_ids() == idx.doc_ids());
  for (int qi = 0; qi < 20; ++qi) {
    const auto q = testing::random_rep(rng, kThree, 6);
    const auto a = search(idx, q, 30);
    const auto b = search(back, q, 30);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].id == b[i].id);
      CHECK(a[i].score == b[i].score);
    }
  }

  const auto bytes = serialize_index(idx);
  CHECK_THROWS_AS(deserialize_index(bytes.substr(0, bytes.size() / 2)), CorruptFile);
  CHECK_THROWS_AS(deserialize_index(bytes.substr(0, bytes.size() - 1)), CorruptFile);
  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(deserialize_index(flipped), CorruptFile);
  CHECK_THROWS_AS(deserialize_index("UHDX" + bytes.substr(4)), FormatError);

  std::ofstream(dir.file("t.uhdi"), std::ios::binary) << bytes.substr(0, 40);
  CHECK_THROWS_AS(read_index(dir.file("t.uhdi")), CorruptFile);

  const auto empty = deserialize_index(serialize_index(IndexBuilder().finish()));
  CHECK(empty.doc_count() == 0);
  CHECK(empty.posting_count() == 0);
}

TEST_CASE("index statistics") {
  const auto zero = index_stats(IndexBuilder().finish());
  CHECK(zero.docs == 0);
  CHECK(zero.postings == 0);
  CHECK(zero.buckets.empty());

  BucketedRepresentation<float> d;
  d.add({1, 1, 16, 1.0f}, SparseVector<float>(16, {{1, 0.1f}, {3, 0.2f}, {5, 0.3f}, {7, 0.4f}, {9, 0.5f}}));
  IndexBuilder b;
  b.add("x", d);
  const auto one = index_stats(std::move(b).finish());
  REQUIRE(one.buckets.size() == 1);
  CHECK(one.buckets[0].activation_frequency.size() == 5);
  for (const auto& [dim, count] : one.buckets[0].activation_frequency) CHECK(count == 1);
  CHECK(one.buckets[0].nnz_histogram.at(5) == 1);

  Rng rng(7);
  const auto c = random_corpus(rng, kThree, 100, 9);
  const auto stats = index_stats(index_of(c, kThree));
  std::size_t total = 0;
  for (const auto& bs : stats.buckets) {
    std::size_t s = 0;
    for (const auto& [dim, count] : bs.activation_frequency) s += count;
    CHECK(s == bs.postings);
    total += s;
  }
  CHECK(total == stats.postings);
}
