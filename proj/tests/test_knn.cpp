#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "kronml/knn.hpp"
#include "kronml/rng.hpp"

using namespace kronml;

namespace {

LabeledDataset make_v1(int n, const std::vector<std::vector<std::uint8_t>>& rows,
                       const std::vector<std::uint8_t>& labels) {
  LabeledDataset d;
  d.n = n;
  d.a = Encoding::v1;
  d.row_len = 3 * static_cast<std::size_t>(n);
  for (const auto& r : rows) d.features.insert(d.features.end(), r.begin(), r.end());
  d.labels = labels;
  return d;
}

LabeledDataset random_v1(int n, std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset d;
  d.n = n;
  d.a = Encoding::v1;
  d.row_len = 3 * static_cast<std::size_t>(n);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < d.row_len; ++c)
      d.features.push_back(static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(n) + 1)));
    d.labels.push_back(static_cast<std::uint8_t>(rng.below(2)));
  }
  return d;
}

}  // namespace

TEST_CASE("1-NN memorizes distinct training points") {
  auto d = random_v1(4, 10, 5);
  // Force distinct rows by overwriting the first feature with the row id.
  for (std::size_t r = 0; r < d.rows(); ++r) d.features[r * d.row_len] = static_cast<std::uint8_t>(r);
  const auto m = knn_fit(d, 1);
  for (std::size_t r = 0; r < d.rows(); ++r) CHECK(knn_predict(m, d.row(r)) == d.label(r));
}

TEST_CASE("fit rejects bad arguments") {
  const auto d = random_v1(4, 10, 6);
  CHECK_THROWS_AS(knn_fit(d, 2), std::invalid_argument);
  CHECK_THROWS_AS(knn_fit(d, 0), std::invalid_argument);
  CHECK_THROWS_AS(knn_fit(d, 11), std::invalid_argument);
  auto v2 = d;
  v2.a = Encoding::v2;
  CHECK_THROWS_AS(knn_fit(v2, 1), std::invalid_argument);
}

TEST_CASE("exact duplicates resolve to the lower row index") {
  const auto d = make_v1(1, {{2, 2, 2}, {2, 2, 2}, {9, 9, 9}}, {1, 0, 0});
  const auto m = knn_fit(d, 1);
  const std::vector<std::uint8_t> q{2, 2, 2};
  CHECK(knn_predict(m, q) == 1);  // row 0 wins the tie

  const auto swapped = make_v1(1, {{2, 2, 2}, {2, 2, 2}, {9, 9, 9}}, {0, 1, 0});
  CHECK(knn_predict(knn_fit(swapped, 1), q) == 0);
}

TEST_CASE("majority vote over k = 3") {
  const auto d = make_v1(1, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {9, 9, 9}}, {1, 1, 0, 0});
  const auto m = knn_fit(d, 3);
  const std::vector<std::uint8_t> q{0, 0, 0};
  CHECK(knn_predict(m, q) == 1);  // neighbors are rows 0, 1, 2 -> labels 1,1,0
}

TEST_CASE("row permutation does not change predictions away from ties") {
  auto train = random_v1(4, 60, 17);
  for (std::size_t r = 0; r < train.rows(); ++r)
    train.features[r * train.row_len] = static_cast<std::uint8_t>(r);  // unique rows
  const auto queries = random_v1(4, 25, 18);
  const auto base = knn_predict_batch(knn_fit(train, 3), queries, 2);

  // Reverse the training rows.
  LabeledDataset rev = train;
  for (std::size_t r = 0; r < train.rows(); ++r) {
    const auto src = train.row(train.rows() - 1 - r);
    std::copy(src.begin(), src.end(), rev.features.begin() + static_cast<std::ptrdiff_t>(r * rev.row_len));
    rev.labels[r] = train.labels[train.rows() - 1 - r];
  }
  const auto flipped = knn_predict_batch(knn_fit(rev, 3), queries, 2);
  CHECK(base == flipped);
}

TEST_CASE("uniform feature scaling leaves predictions unchanged") {
  auto train = random_v1(4, 40, 23);
  auto queries = random_v1(4, 15, 24);
  const auto base = knn_predict_batch(knn_fit(train, 5), queries, 1);
  for (auto& v : train.features) v = static_cast<std::uint8_t>(v * 3);
  for (auto& v : queries.features) v = static_cast<std::uint8_t>(v * 3);
  const auto scaled = knn_predict_batch(knn_fit(train, 5), queries, 1);
  CHECK(base == scaled);
}

TEST_CASE("neighbor label matrix agrees with direct prediction") {
  const auto train = random_v1(4, 50, 31);
  const auto queries = random_v1(4, 20, 32);
  const auto m9 = knn_fit(train, 9);
  const auto nl = knn_neighbor_labels(m9, queries, 9, 2);
  for (int k : {1, 3, 5, 7, 9}) {
    const auto mk = knn_fit(train, k);
    const auto direct = knn_predict_batch(mk, queries, 1);
    for (std::size_t q = 0; q < queries.rows(); ++q) {
      int ones = 0;
      for (int i = 0; i < k; ++i) ones += nl[q * 9 + static_cast<std::size_t>(i)];
      CHECK(static_cast<int>(direct[q]) == (ones * 2 > k ? 1 : 0));
    }
  }
}

TEST_CASE("persistence round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "kronml_knn_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto train = random_v1(3, 30, 41);
  const auto m = knn_fit(train, 5);
  const auto file = dir / "model_nearn.txt";
  save_knn(m, file);
  const auto back = load_knn(file);
  CHECK(back.k == m.k);
  CHECK(back.features == m.features);
  CHECK(back.labels == m.labels);
  std::filesystem::remove_all(dir);
}
