#include <doctest.h>

#include <cmath>
#include <set>

#include "rebalance/rng.hpp"

using namespace rebalance;

TEST_CASE("same seed gives identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64() ? 1 : 0;
  CHECK(same == 0);
}

TEST_CASE("uniform stays in [0,1) and has sane mean") {
  Rng rng(7);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / 20000.0 - 0.5) < 0.01);
}

TEST_CASE("below covers the whole range without bias") {
  Rng rng(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(rng.below(7));
  CHECK(seen.size() == 7);
}

TEST_CASE("normal has zero mean and unit variance approximately") {
  Rng rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.03);
}

TEST_CASE("split streams are independent of draw order") {
  const Rng root(9);
  Rng a = root.split(4);
  const std::uint64_t first = a.next_u64();

  Rng other = root.split(5);
  other.next_u64();
  Rng a2 = root.split(4);
  CHECK(a2.next_u64() == first);
}

TEST_CASE("hash64 is order sensitive") {
  CHECK(hash64(1, 2, 3) != hash64(1, 3, 2));
  CHECK(hash64(0, "smote", "knn") != hash64(0, "knn", "smote"));
  CHECK(hash64(5, "a") == hash64(5, "a"));
}

TEST_CASE("shuffle is a permutation and seed-deterministic") {
  std::vector<int> v = {1, 2, 3, 4, 5, 6, 7, 8};
  Rng a(13);
  a.shuffle(v);
  std::vector<int> w = {1, 2, 3, 4, 5, 6, 7, 8};
  Rng b(13);
  b.shuffle(w);
  CHECK(v == w);
  std::set<int> s(v.begin(), v.end());
  CHECK(s.size() == 8);
}
