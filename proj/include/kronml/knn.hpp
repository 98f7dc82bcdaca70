#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "kronml/dataset.hpp"

namespace kronml {

// Brute-force nearest neighbors on v1 rows, squared Euclidean distance.
// No learning phase: fit stores the training matrix.
struct KnnModel {
  int n = 0;
  int k = 5;
  std::size_t dim = 0;
  std::vector<std::uint8_t> features;  // rows() * dim
  std::vector<std::uint8_t> labels;

  std::size_t rows() const { return labels.size(); }
  std::span<const std::uint8_t> row(std::size_t r) const { return {features.data() + r * dim, dim}; }
};

// Rejects non-v1 datasets, even k, and k larger than the training set.
KnnModel knn_fit(const LabeledDataset& train, int k);

// Majority vote among the k nearest rows; equal distances are resolved in
// favor of the lower row index, and odd k rules out vote ties.
int knn_predict(const KnnModel& model, std::span<const std::uint8_t> x);

std::vector<std::uint8_t> knn_predict_batch(const KnnModel& model, const LabeledDataset& queries,
                                            int threads = 1);

// Labels of the kmax nearest rows per query, ordered by (distance, index);
// one scan serves every k <= kmax (row-major, queries.rows() x kmax).
std::vector<std::uint8_t> knn_neighbor_labels(const KnnModel& model, const LabeledDataset& queries,
                                              int kmax, int threads = 1);

// Persistence: "k=<k>" line followed by the dataset CSV of the stored rows.
void save_knn(const KnnModel& model, const std::filesystem::path& file);
KnnModel load_knn(const std::filesystem::path& file);

}  // namespace kronml
