#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "support.hpp"
#include "uhd/bucketed.hpp"
#include "uhd/error.hpp"
#include "uhd/sparse_vector.hpp"

using uhd::SparseVector;
using V = SparseVector<float>;

namespace {

V vec(uhd::Dim n, std::vector<uhd::SparseEntry<float>> e) { return V(n, std::move(e)); }

bool subset(const std::vector<uhd::Dim>& a, const std::vector<uhd::Dim>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

TEST_CASE("sparse vector rejects unsorted, out of range and zero entries") {
  CHECK_THROWS_AS(vec(10, {{3, 1.0f}, {2, 1.0f}}), uhd::InvalidArgument);
  CHECK_THROWS_AS(vec(10, {{3, 1.0f}, {3, 2.0f}}), uhd::InvalidArgument);
  CHECK_THROWS_AS(vec(10, {{10, 1.0f}}), uhd::InvalidArgument);
  CHECK_THROWS_AS(vec(10, {{1, 0.0f}}), uhd::InvalidArgument);
  CHECK_THROWS_AS(vec(10, {{1, std::nanf("")}}), uhd::InvalidArgument);
  CHECK(vec(10, {}).empty());
}

TEST_CASE("dot examples") {
  CHECK(uhd::dot(vec(10, {{1, 0.6f}, {2, 0.8f}}), vec(10, {{2, 0.5f}, {3, 1.0f}})) ==
        doctest::Approx(0.8 * 0.5).epsilon(1e-7));
  CHECK(uhd::dot(vec(10, {{1, 1.0f}}), vec(10, {{2, 1.0f}})) == 0.0);
  const auto a = vec(16, {{5, 3.0f}, {9, 4.0f}});
  CHECK(uhd::dot(a, a) == 25.0);
  CHECK_THROWS_AS(uhd::dot(vec(4, {}), vec(5, {})), uhd::InvalidArgument);
}

TEST_CASE("dot is symmetric and bilinear") {
  uhd::Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const auto a = testing::random_sparse(rng, 64, 1 + rng.below(20), false);
    const auto b = testing::random_sparse(rng, 64, 1 + rng.below(20), false);
    CHECK(uhd::dot(a, b) == uhd::dot(b, a));
    const double c = rng.uniform(-3.0, 3.0);
    const auto ca = a.cast<double>().scaled(c);
    const double lhs = uhd::dot(ca, b.cast<double>());
    const double rhs = c * uhd::dot(a.cast<double>(), b.cast<double>());
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("max_pool examples") {
  const std::vector<V> two{vec(10, {{1, 0.5f}}), vec(10, {{1, 0.3f}, {7, 0.2f}})};
  CHECK(uhd::max_pool(two) == vec(10, {{1, 0.5f}, {7, 0.2f}}));

  const std::vector<V> single{vec(10, {{1, -0.5f}, {4, 0.25f}})};
  CHECK(uhd::max_pool(single) == vec(10, {{4, 0.25f}}));

  const std::vector<V> disjoint{vec(10, {{1, 0.5f}}), vec(10, {{3, 0.1f}, {8, 0.9f}})};
  CHECK(uhd::max_pool(disjoint) == vec(10, {{1, 0.5f}, {3, 0.1f}, {8, 0.9f}}));

  CHECK_THROWS_AS(uhd::max_pool(std::vector<V>{}), uhd::InvalidArgument);
  CHECK_THROWS_AS(uhd::max_pool(std::vector<V>{vec(3, {}), vec(4, {})}), uhd::InvalidArgument);
}

TEST_CASE("max_pool support property") {
  uhd::Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const bool positive = t % 2 == 0;
    std::vector<V> vs;
    std::set<uhd::Dim> uni;
    for (std::size_t i = 0, m = 1 + rng.below(5); i < m; ++i) {
      vs.push_back(testing::random_sparse(rng, 50, rng.below(12), positive));
      for (auto d : vs.back().support()) uni.insert(d);
    }
    const auto pooled = uhd::max_pool(vs);
    const std::vector<uhd::Dim> u(uni.begin(), uni.end());
    CHECK(subset(pooled.support(), u));
    if (positive) CHECK(pooled.support() == u);
    for (const auto& e : pooled) {
      float best = 0.0f;
      for (const auto& v : vs) best = std::max(best, v.at(e.dim));
      CHECK(e.weight == best);
    }
  }
}

TEST_CASE("l2_normalize examples and properties") {
  const auto n = uhd::l2_normalize(vec(4, {{1, 3.0f}, {2, 4.0f}}));
  CHECK(n.at(1) == doctest::Approx(0.6));
  CHECK(n.at(2) == doctest::Approx(0.8));
  CHECK(uhd::l2_normalize(vec(4, {})).empty());
  CHECK(uhd::l2_normalize(vec(8, {{7, 1.0f}})) == vec(8, {{7, 1.0f}}));

  uhd::Rng rng(13);
  for (int t = 0; t < 200; ++t) {
    const auto v = testing::random_sparse(rng, 100, 1 + rng.below(30), false).cast<double>();
    const auto once = uhd::l2_normalize(v);
    const auto twice = uhd::l2_normalize(once);
    CHECK(std::abs(once.norm() - 1.0) <= 1e-9);
    CHECK(once.support() == v.support());
    for (const auto& e : once) CHECK(std::abs(twice.at(e.dim) - e.weight) <= 1e-9);
  }
}

TEST_CASE("truncate_top_k examples") {
  CHECK(uhd::truncate_top_k(vec(10, {{1, 0.2f}, {4, 0.9f}, {8, 0.5f}}), 2) == vec(10, {{4, 0.9f}, {8, 0.5f}}));
  const auto v = vec(10, {{1, 0.2f}, {4, 0.9f}});
  CHECK(uhd::truncate_top_k(v, 2) == v);
  CHECK(uhd::truncate_top_k(v, 7) == v);
  CHECK(uhd::truncate_top_k(vec(10, {{1, 0.5f}, {2, 0.5f}}), 1) == vec(10, {{1, 0.5f}}));
  CHECK_THROWS_AS(uhd::truncate_top_k(v, 0), uhd::InvalidArgument);
}

TEST_CASE("truncate_top_k nests") {
  uhd::Rng rng(14);
  for (int t = 0; t < 200; ++t) {
    const auto v = testing::random_sparse(rng, 80, rng.below(40), false);
    const std::size_t k = 1 + rng.below(40);
    const std::size_t kp = 1 + rng.below(k);
    const auto big = uhd::truncate_top_k(v, k);
    const auto small = uhd::truncate_top_k(v, kp);
    CHECK(small.nnz() == std::min(kp, v.nnz()));
    CHECK(subset(small.support(), big.support()));
  }
}

TEST_CASE("relevance examples") {
  uhd::BucketedRepresentation<float> q, d;
  q.add({1, 1, 8, 1.0f}, vec(8, {{0, 0.6f}, {1, 0.8f}}));
  d.add({1, 1, 8, 1.0f}, vec(8, {{1, 0.5f}}));
  CHECK(uhd::relevance(q, d) == uhd::dot(q[0].vector, d[0].vector));

  uhd::BucketedRepresentation<float> q2, d2;
  q2.add({2, 1, 4, 1.0f}, vec(4, {{0, 0.8f}}));
  q2.add({4, 1, 4, 0.5f}, vec(4, {{1, 0.5f}}));
  d2.add({2, 1, 4, 1.0f}, vec(4, {{0, 0.5f}}));
  d2.add({4, 1, 4, 1.0f}, vec(4, {{1, 0.5f}}));
  CHECK(uhd::relevance(q2, d2) == doctest::Approx(0.4 * 1.0 + 0.25 * 0.5));

  q2.set_weights({0.0f, 0.0f});
  CHECK(uhd::relevance(q2, d2) == 0.0);
  CHECK_THROWS_AS(uhd::relevance(q, d2), uhd::InvalidArgument);
}

TEST_CASE("bucketed representation invariants") {
  uhd::BucketedRepresentation<float> r;
  r.add({1, 1, 8, 1.0f}, vec(8, {}));
  CHECK_THROWS_AS(r.add({1, 1, 8, 1.0f}, vec(8, {})), uhd::InvalidArgument);
  CHECK_THROWS_AS(r.add({2, 1, 9, 1.0f}, vec(8, {})), uhd::InvalidArgument);
  CHECK_THROWS_AS(r.add({2, 1, 8, -1.0f}, vec(8, {})), uhd::InvalidArgument);
  CHECK_THROWS_AS(r.set_weights({1.0f, 2.0f}), uhd::InvalidArgument);
}
