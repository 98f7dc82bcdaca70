#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace kronml {

// 2x2 confusion matrix; rows = true class, columns = predicted class.
struct Confusion {
  std::array<std::array<std::int64_t, 2>, 2> m{};

  std::int64_t& at(int true_cls, int pred_cls) { return m[static_cast<std::size_t>(true_cls)][static_cast<std::size_t>(pred_cls)]; }
  std::int64_t at(int true_cls, int pred_cls) const { return m[static_cast<std::size_t>(true_cls)][static_cast<std::size_t>(pred_cls)]; }
  std::int64_t total() const { return m[0][0] + m[0][1] + m[1][0] + m[1][1]; }
  bool operator==(const Confusion&) const = default;
};

Confusion confusion_matrix(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted);

double accuracy(const Confusion& c);
double precision_of(const Confusion& c, int cls);  // diag / column sum, 0 when the column is empty
double recall_of(const Confusion& c, int cls);     // diag / row sum, 0 when the row is empty

// Rank-based AUC with midrank tie handling. Throws std::invalid_argument
// when only one class is present.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

}  // namespace kronml
