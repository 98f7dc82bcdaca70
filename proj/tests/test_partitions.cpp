#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "kronml/partitions.hpp"

using namespace kronml;

namespace {

// Independent enumeration oracle: recursive descent with a max-part bound.
void brute_partitions(int remaining, int max_part, std::vector<int>& cur,
                      std::set<std::vector<int>>& out) {
  if (remaining == 0) {
    out.insert(cur);
    return;
  }
  for (int next = std::min(remaining, max_part); next >= 1; --next) {
    cur.push_back(next);
    brute_partitions(remaining - next, next, cur, out);
    cur.pop_back();
  }
}

std::set<std::vector<int>> brute_partitions(int n) {
  std::set<std::vector<int>> out;
  std::vector<int> cur;
  brute_partitions(n, n, cur, out);
  return out;
}

}  // namespace

TEST_CASE("enumeration of P(5) matches the exact listing") {
  const auto parts = enumerate_partitions(5);
  const std::vector<std::vector<int>> expected = {
      {5}, {4, 1}, {3, 2}, {3, 1, 1}, {2, 2, 1}, {2, 1, 1, 1}, {1, 1, 1, 1, 1}};
  REQUIRE(parts.size() == expected.size());
  for (std::size_t i = 0; i < parts.size(); ++i) CHECK(parts[i].parts() == expected[i]);
}

TEST_CASE("edge enumerations and guards") {
  const auto one = enumerate_partitions(1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].parts() == std::vector<int>{1});
  CHECK_THROWS_AS(enumerate_partitions(0), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_partitions(31), std::invalid_argument);
}

TEST_CASE("enumeration agrees with brute-force recursion") {
  for (int n = 1; n <= 10; ++n) {
    const auto got = enumerate_partitions(n);
    const auto expect = brute_partitions(n);
    REQUIRE(got.size() == expect.size());
    std::set<std::vector<int>> seen;
    for (const auto& p : got) {
      CHECK(p.n() == n);
      seen.insert(p.parts());
    }
    CHECK(seen == expect);
  }
  CHECK(enumerate_partitions(12).size() == 77);
  CHECK(enumerate_partitions(13).size() == 101);
  CHECK(enumerate_partitions(14).size() == 135);
}

TEST_CASE("order is strictly reverse-lexicographic") {
  for (int n : {6, 9, 12}) {
    const auto parts = enumerate_partitions(n);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) CHECK(parts[i] > parts[i + 1]);
  }
}

TEST_CASE("depth") {
  CHECK(depth(Partition({5})) == 0);
  CHECK(depth(Partition({1, 1, 1, 1, 1})) == 4);
  CHECK(depth(Partition({3, 2, 1})) == 3);
}

TEST_CASE("pad") {
  CHECK(pad(Partition({3, 2}), 5) == std::vector<int>{3, 2, 0, 0, 0});
  CHECK(pad(Partition({5}), 5) == std::vector<int>{5, 0, 0, 0, 0});
  CHECK(pad(Partition({1, 1}), 2) == std::vector<int>{1, 1});
  CHECK_THROWS_AS(pad(Partition({3, 2}), 6), std::invalid_argument);
}

TEST_CASE("conjugate") {
  CHECK(conjugate(Partition({6})).parts() == std::vector<int>{1, 1, 1, 1, 1, 1});
  CHECK(conjugate(Partition({2, 1})).parts() == std::vector<int>{2, 1});
  CHECK(conjugate(Partition({3, 1})).parts() == std::vector<int>{2, 1, 1});
  for (int n = 1; n <= 14; ++n)
    for (const auto& p : enumerate_partitions(n)) CHECK(conjugate(conjugate(p)) == p);
}

TEST_CASE("partition construction validates") {
  CHECK_THROWS_AS(Partition({1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(Partition({2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(Partition({-1}), std::invalid_argument);
}

TEST_CASE("partition_index inverts enumeration") {
  const auto order = enumerate_partitions(9);
  for (std::size_t i = 0; i < order.size(); ++i)
    CHECK(partition_index(order, order[i]) == static_cast<int>(i));
  CHECK_THROWS_AS(partition_index(order, Partition({10})), std::invalid_argument);
}
