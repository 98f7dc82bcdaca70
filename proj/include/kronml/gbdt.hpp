#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "kronml/dataset.hpp"

namespace kronml {

struct GbdtConfig {
  int num_leaves = 63;
  double feature_fraction = 0.5;
  double bagging_fraction = 0.5;
  int bagging_freq = 20;
  double learning_rate = 0.01;
  int num_iterations = 10000;
  int early_stopping_rounds = 50;
  int max_bin = 255;
  int min_data_in_leaf = 20;
  double lambda_l2 = 1.0;
  std::uint64_t seed = 0;
};

// Internal node: go left when bin(x[feature]) <= threshold. Leaves carry
// feature = -1 and the raw Newton value -G/(H+lambda); the learning rate is
// applied where values are summed.
struct GbdtNode {
  int feature = -1;
  int threshold = 0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;
};

struct GbdtTree {
  std::vector<GbdtNode> nodes;  // nodes[0] is the root
  int leaf_count() const;
};

// Boosted ensemble with binary logistic loss. Splits are on bin ranks of
// the per-feature sorted unique training values, so any strictly increasing
// per-feature transform leaves every routing decision unchanged.
struct GbdtModel {
  GbdtConfig config;
  double base_score = 0.0;
  int n_features = 0;
  std::vector<std::vector<std::uint8_t>> bin_edges;  // per feature, ascending unique values
  std::vector<GbdtTree> trees;
  int best_iteration = -1;  // trees used at prediction; -1 = all

  int used_trees() const {
    return best_iteration >= 0 ? best_iteration : static_cast<int>(trees.size());
  }
};

struct GbdtHistory {
  std::vector<double> train_logloss;  // after each tree
  std::vector<double> val_auc;        // empty when no usable validation set
};

// Trains on v1 rows. Per iteration: gradients g = p - y, hessians
// h = p(1-p); one tree grown leaf-wise by maximal gain
//   1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)]
// with equal gains resolved toward the lowest feature then threshold.
// Rows are rebagged every bagging_freq iterations, features resampled per
// tree. Stops early when validation AUC fails to improve for
// early_stopping_rounds; a single-class validation set disables the metric
// and early stopping.
GbdtModel gbdt_fit(const LabeledDataset& train, const LabeledDataset* valid,
                   const GbdtConfig& config, GbdtHistory* history = nullptr, int threads = 1);

// sigmoid(base_score + lr * sum of leaf values along x's path).
double gbdt_predict_proba(const GbdtModel& model, std::span<const std::uint8_t> x);
std::vector<double> gbdt_scores(const GbdtModel& model, const LabeledDataset& data, int threads = 1);
std::vector<std::uint8_t> gbdt_predict_batch(const GbdtModel& model, const LabeledDataset& data,
                                             int threads = 1);

void save_gbdt(const GbdtModel& model, const std::filesystem::path& file);
GbdtModel load_gbdt(const std::filesystem::path& file);

}  // namespace kronml
