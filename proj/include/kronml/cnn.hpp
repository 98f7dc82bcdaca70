#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kronml/dataset.hpp"

namespace kronml {

enum class CnnVariant { cnn2, cnn3 };

std::string cnn_variant_name(CnnVariant v);
CnnVariant cnn_variant_from_name(const std::string& s);

// Shapes are fully determined by the variant and n:
//   cnn2: input n x 3 x 1, kernel (n-4) x 3, 32 filters -> 5 x 1 x 32 -> dense 2
//   cnn3: input 6 x n x 3, kernel 2 x (n-4), 32 filters -> 5 x 5 x 32 -> dense 2
// Total parameters: 96n - 30 (cnn2), 192n + 866 (cnn3); asserted at build.
struct CnnShape {
  int n = 0;
  int in_h = 0, in_w = 0, in_c = 0;
  int kh = 0, kw = 0;
  int filters = 32;
  int out_h = 0, out_w = 0;
  int flat = 0;
  int classes = 2;

  static CnnShape make(CnnVariant v, int n);
  std::size_t conv_w_count() const { return static_cast<std::size_t>(filters) * kh * kw * in_c; }
  std::size_t dense_w_count() const { return static_cast<std::size_t>(classes) * flat; }
  std::size_t param_count() const {
    return conv_w_count() + static_cast<std::size_t>(filters) + dense_w_count() + static_cast<std::size_t>(classes);
  }
  std::size_t input_len() const { return static_cast<std::size_t>(in_h) * in_w * in_c; }
};

struct CnnConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 128;
  int epochs = 20;
  std::uint64_t seed = 0;  // epoch shuffling
  int eval_threads = 1;    // inference only; training stays sequential
};

// Parameters live in one flat vector, ordered conv weights, conv biases,
// dense weights, dense biases. All double precision.
struct CnnModel {
  CnnVariant variant = CnnVariant::cnn2;
  CnnShape shape;
  std::uint64_t seed = 0;
  CnnConfig config;
  std::vector<double> params;

  double* conv_w() { return params.data(); }
  double* conv_b() { return params.data() + shape.conv_w_count(); }
  double* dense_w() { return conv_b() + shape.filters; }
  double* dense_b() { return dense_w() + shape.dense_w_count(); }
  const double* conv_w() const { return params.data(); }
  const double* conv_b() const { return params.data() + shape.conv_w_count(); }
  const double* dense_w() const { return conv_b() + shape.filters; }
  const double* dense_b() const { return dense_w() + shape.dense_w_count(); }
};

// Glorot-uniform initialized model; requires n >= 6 so the kernels fit.
CnnModel cnn_build(CnnVariant v, int n, std::uint64_t seed);

// Softmax class probabilities for one raw feature row (v2 for cnn2, v3 for
// cnn3); components are positive and sum to 1.
std::array<double, 2> cnn_forward(const CnnModel& model, std::span<const std::uint8_t> x);

// Mean cross-entropy and mean parameter gradient over the given rows.
double cnn_loss_and_grad(const CnnModel& model, const LabeledDataset& data,
                         std::span<const std::size_t> rows, std::vector<double>& grad);

struct CnnTrainLog {
  std::vector<double> train_loss;    // per epoch, mean over samples
  std::vector<double> val_accuracy;  // per epoch when a validation set is given
};

// Mini-batch Adam on mean cross-entropy. Sequential over batches for
// determinism; throws std::runtime_error with diagnostics if the loss goes
// non-finite.
CnnTrainLog cnn_train(CnnModel& model, const LabeledDataset& train, const LabeledDataset* valid,
                      const CnnConfig& config);

std::vector<std::uint8_t> cnn_predict_batch(const CnnModel& model, const LabeledDataset& data,
                                            int threads = 1);
// P(class 1) per row.
std::vector<double> cnn_scores(const CnnModel& model, const LabeledDataset& data, int threads = 1);

// Text persistence: one header line (variant, n, seed, config), then the
// parameters in declaration order. The loader re-asserts parameter counts.
void save_cnn(const CnnModel& model, const std::filesystem::path& file);
CnnModel load_cnn(const std::filesystem::path& file);

}  // namespace kronml
