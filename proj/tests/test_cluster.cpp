#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "funcclust/cluster.hpp"
#include "funcclust/rng.hpp"
#include "oracles.hpp"

using namespace funcclust;

TEST_CASE("allocation takes the argmax with smallest-index ties") {
  ResponsibilityMatrix resp;
  resp.values.resize(3, 3);
  resp.values << 0.2, 0.7, 0.1,
                 0.5, 0.5, 0.0,
                 0.0, 0.0, 1.0;
  Partition p = allocate(resp);
  REQUIRE(p.label(0) == 2);
  REQUIRE(p.label(1) == 1);  // documented tie-break
  REQUIRE(p.label(2) == 3);
}

TEST_CASE("one-hot responsibilities allocate to the hot index") {
  ResponsibilityMatrix resp;
  resp.values = Eigen::MatrixXd::Zero(4, 3);
  resp.values(0, 2) = 1.0;
  resp.values(1, 0) = 1.0;
  resp.values(2, 1) = 1.0;
  resp.values(3, 2) = 1.0;
  Partition p = allocate(resp);
  REQUIRE(p.labels() == std::vector<int>{3, 1, 2, 3});
}

TEST_CASE("allocation is invariant to positive row scaling") {
  Rng rng(55);
  Eigen::MatrixXd raw(20, 4);
  for (int i = 0; i < 20; ++i)
    for (int c = 0; c < 4; ++c) raw(i, c) = rng.uniform() + 1e-3;
  ResponsibilityMatrix a, b;
  a.values = raw.array().colwise() / raw.rowwise().sum().array();
  Eigen::VectorXd scale(20);
  for (int i = 0; i < 20; ++i) scale[i] = 0.5 + 4.0 * rng.uniform();
  Eigen::MatrixXd scaled = raw.array().colwise() * scale.array();
  b.values = scaled.array().colwise() / scaled.rowwise().sum().array();
  REQUIRE(allocate(a).labels() == allocate(b).labels());
}

TEST_CASE("ARI of a relabeled identical partition is one") {
  Partition a({1, 1, 2, 2}, 2);
  Partition b({2, 2, 1, 1}, 2);
  REQUIRE(adjusted_rand_index(a, b) == 1.0);
}

TEST_CASE("ARI against a trivial partition is zero") {
  Partition a({1, 1, 1, 1}, 1);
  Partition b({1, 2, 1, 2}, 2);
  REQUIRE(adjusted_rand_index(a, b) == 0.0);
}

TEST_CASE("six-point split matches the pair-counting oracle") {
  std::vector<int> a{1, 1, 2, 2, 3, 3};
  std::vector<int> b{1, 1, 2, 3, 3, 3};
  const double expected = oracles::ari_pair_counting(a, b);
  REQUIRE(expected == Catch::Approx(4.0 / 9.0).epsilon(1e-14));
  REQUIRE(adjusted_rand_index(Partition(a, 3), Partition(b, 3)) ==
          Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("identical trivial partitions score one") {
  Partition ones({1, 1, 1}, 1);
  REQUIRE(adjusted_rand_index(ones, ones) == 1.0);
  Partition singletons({1, 2, 3}, 3);
  REQUIRE(adjusted_rand_index(singletons, singletons) == 1.0);
}

TEST_CASE("ARI rejects length mismatches") {
  Partition a({1, 2}, 2);
  Partition b({1, 2, 1}, 2);
  REQUIRE_THROWS_AS(adjusted_rand_index(a, b), DataError);
}

TEST_CASE("ARI matches the brute-force oracle on random pairs") {
  Rng rng(31415);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.index_below(29));
    const int ga = 1 + static_cast<int>(rng.index_below(5));
    const int gb = 1 + static_cast<int>(rng.index_below(5));
    std::vector<int> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng.index_below(ga));
      b[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng.index_below(gb));
    }
    const double ours = adjusted_rand_index(Partition(a, ga), Partition(b, gb));
    const double oracle = oracles::ari_pair_counting(a, b);
    REQUIRE(ours == Catch::Approx(oracle).margin(1e-12));
    REQUIRE(ours <= 1.0);
  }
}

TEST_CASE("ARI is symmetric and label-invariant") {
  Rng rng(2718);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 5 + static_cast<int>(rng.index_below(25));
    std::vector<int> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng.index_below(4));
      b[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng.index_below(4));
    }
    Partition pa(a, 4), pb(b, 4);
    REQUIRE(adjusted_rand_index(pa, pb) == adjusted_rand_index(pb, pa));

    // Relabel a through a bijection; the index must not change.
    const int map[4] = {3, 1, 4, 2};
    std::vector<int> relabeled(a);
    for (auto& v : relabeled) v = map[v - 1];
    REQUIRE(adjusted_rand_index(Partition(relabeled, 4), pb) ==
            adjusted_rand_index(pa, pb));
  }
}

TEST_CASE("partition validation") {
  REQUIRE_THROWS_AS(Partition({0, 1}, 2), DataError);
  REQUIRE_THROWS_AS(Partition({1, 3}, 2), DataError);
  REQUIRE_THROWS_AS(Partition({}, 2), DataError);
}
