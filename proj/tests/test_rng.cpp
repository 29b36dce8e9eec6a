#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "weatkit/rng.hpp"

using namespace weatkit;

TEST_CASE("derive_seed separates purposes, reps and groups") {
  std::uint64_t master = 42;
  CHECK(derive_seed(master, "a") != derive_seed(master, "b"));
  CHECK(derive_seed(master, "a", 1) != derive_seed(master, "a", 2));
  CHECK(derive_seed(master, "a", 1, "g1") !=
        derive_seed(master, "a", 1, "g2"));
  CHECK(derive_seed(master, "a", 1, "g1") ==
        derive_seed(master, "a", 1, "g1"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
}

TEST_CASE("rng streams are deterministic per seed") {
  Rng a(7), b(7), c(8);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    auto va = a.next_u64();
    if (va != b.next_u64()) all_equal = false;
    if (va != c.next_u64()) any_diff = true;
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("below() stays in range and covers the range") {
  Rng rng(123);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    auto v = rng.below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("uniform() lies in [0,1)") {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal() has roughly standard moments") {
  Rng rng(11);
  const int n = 200000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("poisson() has the right mean") {
  Rng rng(13);
  const int n = 100000;
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += double(rng.poisson(4.0));
  CHECK(std::fabs(sum / n - 4.0) < 0.05);
}

TEST_CASE("sample_without_replacement draws distinct indices") {
  Rng rng(5);
  auto idx = sample_without_replacement(100, 40, rng);
  CHECK(idx.size() == 40);
  std::set<std::uint32_t> s(idx.begin(), idx.end());
  CHECK(s.size() == 40);
  for (auto v : idx) CHECK(v < 100);

  Rng rng2(5);
  CHECK(sample_without_replacement(100, 40, rng2) == idx);

  CHECK_THROWS_AS(sample_without_replacement(3, 4, rng), DataError);
}

TEST_CASE("sample_without_replacement with k == n is a permutation") {
  Rng rng(17);
  auto idx = sample_without_replacement(50, 50, rng);
  std::set<std::uint32_t> s(idx.begin(), idx.end());
  CHECK(s.size() == 50);
  bool shuffled = false;
  for (std::size_t i = 0; i < idx.size(); ++i)
    if (idx[i] != i) shuffled = true;
  CHECK(shuffled);
}

TEST_CASE("alias sampler matches its distribution") {
  std::vector<double> weights = {1.0, 2.0, 4.0, 8.0};
  AliasSampler alias(weights);
  Rng rng(31);
  const int n = 1000000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) ++counts[alias.sample(rng)];
  double total_w = 15.0;
  for (int k = 0; k < 4; ++k) {
    double p = weights[k] / total_w;
    double se = std::sqrt(p * (1 - p) * n);
    CHECK(std::fabs(counts[k] - p * n) < 4.0 * se);
  }
}

TEST_CASE("alias sampler rejects bad weights") {
  CHECK_THROWS_AS(AliasSampler(std::vector<double>{}), NumericError);
  CHECK_THROWS_AS(AliasSampler(std::vector<double>{0.0, 0.0}), NumericError);
  CHECK_THROWS_AS(AliasSampler(std::vector<double>{1.0, -1.0}), NumericError);
}
