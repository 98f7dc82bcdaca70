#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <set>

#include "kronml/dataset.hpp"

using namespace kronml;

TEST_CASE("Q counts for tiny n by enumeration") {
  CHECK(enumerate_q(1).size() == 1);
  // n = 2 by hand: depths are 0 for (2) and 1 for (1,1); of the 8 depth
  // combinations exactly (0,0,0), (0,1,1), (1,0,1), (1,1,0), (1,1,1) pass.
  CHECK(enumerate_q(2).size() == 5);
}

TEST_CASE("Q order is lexicographic in partition indices") {
  const auto q = enumerate_q(5);
  for (std::size_t s = 0; s + 1 < q.size(); ++s) {
    const auto a = std::tuple(q[s].i, q[s].j, q[s].k);
    const auto b = std::tuple(q[s + 1].i, q[s + 1].j, q[s + 1].k);
    CHECK(a < b);
  }
}

TEST_CASE("encodings of a concrete triple") {
  const Partition l({3}), m({2, 1}), nu({1, 1, 1});
  CHECK(encode_v1(l, m, nu) == std::vector<std::uint8_t>{3, 0, 0, 2, 1, 0, 1, 1, 1});
  CHECK(encode_v2(l, m, nu) == std::vector<std::uint8_t>{3, 2, 1, 0, 1, 1, 0, 0, 1});
  const Partition two({2});
  CHECK(encode_v1(two, two, two) == std::vector<std::uint8_t>{2, 0, 2, 0, 2, 0});
}

TEST_CASE("v2 is the de-interleaved v1") {
  const Partition l({4, 2}), m({3, 2, 1}), nu({2, 2, 1, 1});
  const auto v1 = encode_v1(l, m, nu);
  const auto v2 = encode_v2(l, m, nu);
  const int n = 6;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) CHECK(v2[static_cast<std::size_t>(3 * i + c)] == v1[static_cast<std::size_t>(c * n + i)]);
}

TEST_CASE("v3 slices are the six permutations in the stated order") {
  const Partition l({4, 2}), m({3, 2, 1}), nu({2, 2, 1, 1});
  const auto v3 = encode_v3(l, m, nu);
  REQUIRE(v3.size() == 18 * 6);
  const std::size_t slice = 18;
  auto slice_of = [&](int s) {
    return std::vector<std::uint8_t>(v3.begin() + s * static_cast<std::ptrdiff_t>(slice),
                                     v3.begin() + (s + 1) * static_cast<std::ptrdiff_t>(slice));
  };
  CHECK(slice_of(0) == encode_v2(l, m, nu));
  CHECK(slice_of(1) == encode_v2(l, nu, m));
  CHECK(slice_of(2) == encode_v2(m, l, nu));
  CHECK(slice_of(3) == encode_v2(m, nu, l));
  CHECK(slice_of(4) == encode_v2(nu, l, m));
  CHECK(slice_of(5) == encode_v2(nu, m, l));
}

TEST_CASE("equal triples give six identical slices") {
  const Partition p({3, 2, 1});
  const auto v3 = encode_v3(p, p, p);
  const std::size_t slice = 18;
  for (int s = 1; s < 6; ++s)
    for (std::size_t i = 0; i < slice; ++i) CHECK(v3[static_cast<std::size_t>(s) * slice + i] == v3[i]);
}

TEST_CASE("dataset build: n=1 single sample") {
  const auto t = character_table(1);
  const auto d = build_dataset(1, Encoding::v1, t);
  REQUIRE(d.rows() == 1);
  CHECK(d.row(0)[0] == 1);
  CHECK(d.row(0)[1] == 1);
  CHECK(d.row(0)[2] == 1);
  CHECK(d.label(0) == 1);
}

TEST_CASE("class counts are encoding independent, rows in range") {
  const auto t = character_table(6);
  const auto d1 = build_dataset(6, Encoding::v1, t, 2);
  const auto d2 = build_dataset(6, Encoding::v2, t, 2);
  const auto d3 = build_dataset(6, Encoding::v3, t, 2);
  CHECK(d1.count_label(0) == d2.count_label(0));
  CHECK(d1.count_label(0) == d3.count_label(0));
  CHECK(d1.count_label(1) == d3.count_label(1));
  CHECK(d1.row_len == 18);
  CHECK(d2.row_len == 18);
  CHECK(d3.row_len == 108);
  for (std::size_t r = 0; r < d3.rows(); ++r)
    for (auto v : d3.row(r)) CHECK(v <= 6);
}

TEST_CASE("balance and split") {
  const auto t = character_table(7);
  const auto d = build_dataset(7, Encoding::v1, t, 2);
  REQUIRE(d.count_label(0) > 0);
  REQUIRE(d.count_label(1) > 0);

  SplitSpec spec{0.7, 99, true};
  const auto res = balance_and_split(d, spec);
  const std::size_t m = std::min(d.count_label(0), d.count_label(1));
  CHECK(res.train.count_label(0) + res.valid.count_label(0) == m);
  CHECK(res.train.count_label(1) + res.valid.count_label(1) == m);
  CHECK(res.train.count_label(0) == res.train.count_label(1));
  CHECK(res.valid.count_label(0) == res.valid.count_label(1));

  // Disjoint row assignment.
  std::set<std::size_t> seen(res.manifest.train_rows.begin(), res.manifest.train_rows.end());
  for (auto r : res.manifest.valid_rows) CHECK(seen.insert(r).second);

  // 70/30 on the per-class count.
  const auto train_per_class = static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(m)));
  CHECK(res.train.count_label(0) == train_per_class);
}

TEST_CASE("split fraction arithmetic on a 200-row set") {
  LabeledDataset d;
  d.n = 2;
  d.a = Encoding::v1;
  d.row_len = 6;
  for (int i = 0; i < 200; ++i) {
    for (int c = 0; c < 6; ++c) d.features.push_back(static_cast<std::uint8_t>(i % 3));
    d.labels.push_back(static_cast<std::uint8_t>(i % 2));
  }
  const auto res = balance_and_split(d, SplitSpec{0.7, 1, true});
  CHECK(res.train.rows() == 140);
  CHECK(res.valid.rows() == 60);
}

TEST_CASE("per-class cap") {
  const auto t = character_table(7);
  const auto d = build_dataset(7, Encoding::v1, t);
  const auto res = balance_and_split(d, SplitSpec{0.7, 5, true}, 50);
  CHECK(res.train.rows() + res.valid.rows() == 100);
}

TEST_CASE("empty class is rejected") {
  LabeledDataset d;
  d.n = 2;
  d.a = Encoding::v1;
  d.row_len = 6;
  for (int i = 0; i < 10; ++i) {
    d.features.insert(d.features.end(), {1, 0, 1, 0, 1, 0});
    d.labels.push_back(1);
  }
  CHECK_THROWS_AS(balance_and_split(d, SplitSpec{}), std::runtime_error);
}

TEST_CASE("identical seeds reproduce identical splits and files") {
  const auto t = character_table(6);
  const auto d = build_dataset(6, Encoding::v1, t);
  const auto a = balance_and_split(d, SplitSpec{0.7, 2024, true});
  const auto b = balance_and_split(d, SplitSpec{0.7, 2024, true});
  CHECK(a.manifest.train_rows == b.manifest.train_rows);
  CHECK(a.train.features == b.train.features);

  const auto c = balance_and_split(d, SplitSpec{0.7, 2025, true});
  CHECK(a.manifest.train_rows != c.manifest.train_rows);
}

TEST_CASE("dataset file round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "kronml_dataset_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  const auto t = character_table(5);
  for (auto enc : {Encoding::v1, Encoding::v3}) {
    const auto d = build_dataset(5, enc, t);
    const auto file = dataset_path(dir, 5, enc);
    save_dataset(d, file);
    const auto back = load_dataset(file);
    CHECK(back.n == d.n);
    CHECK(back.a == d.a);
    CHECK(back.features == d.features);
    CHECK(back.labels == d.labels);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "kronml_manifest_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  SplitManifest m;
  m.seed = 77;
  m.per_class_cap = 10;
  m.train_fraction = 0.7;
  m.train_rows = {5, 1, 9};
  m.valid_rows = {2, 3};
  const auto file = dir / "manifest.txt";
  save_manifest(m, file);
  const auto back = load_manifest(file);
  CHECK(back.seed == m.seed);
  CHECK(back.per_class_cap == m.per_class_cap);
  CHECK(back.train_fraction == doctest::Approx(m.train_fraction));
  CHECK(back.train_rows == m.train_rows);
  CHECK(back.valid_rows == m.valid_rows);
  std::filesystem::remove_all(dir);
}

TEST_CASE("subsample keeps stratification") {
  const auto t = character_table(7);
  const auto d = build_dataset(7, Encoding::v1, t);
  const auto res = balance_and_split(d, SplitSpec{0.7, 5, true});
  const auto half = subsample_rows(res.train, 0.5, 123);
  CHECK(half.rows() == static_cast<std::size_t>(std::llround(0.5 * static_cast<double>(res.train.count_label(0)))) * 2);
  CHECK(half.count_label(0) == half.count_label(1));
}
