#include "kronml/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace kronml {

Confusion confusion_matrix(std::span<const std::uint8_t> truth,
                           std::span<const std::uint8_t> predicted) {
  if (truth.size() != predicted.size())
    throw std::invalid_argument("confusion_matrix: length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) ++c.at(truth[i], predicted[i]);
  return c;
}

double accuracy(const Confusion& c) {
  const std::int64_t total = c.total();
  return total == 0 ? 0.0 : static_cast<double>(c.at(0, 0) + c.at(1, 1)) / static_cast<double>(total);
}

double precision_of(const Confusion& c, int cls) {
  const std::int64_t col = c.at(0, cls) + c.at(1, cls);
  return col == 0 ? 0.0 : static_cast<double>(c.at(cls, cls)) / static_cast<double>(col);
}

double recall_of(const Confusion& c, int cls) {
  const std::int64_t row = c.at(cls, 0) + c.at(cls, 1);
  return row == 0 ? 0.0 : static_cast<double>(c.at(cls, cls)) / static_cast<double>(row);
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: length mismatch");
  const std::size_t n = scores.size();
  std::size_t n1 = 0;
  for (auto l : labels) n1 += l;
  const std::size_t n0 = n - n1;
  if (n0 == 0 || n1 == 0) throw std::invalid_argument("auc: both classes must be present");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks over tied score runs; AUC = (R1 - n1(n1+1)/2) / (n0 n1).
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (labels[idx[t]]) rank_sum_pos += midrank;
    i = j;
  }
  const double expected_min = static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
  return (rank_sum_pos - expected_min) / (static_cast<double>(n0) * static_cast<double>(n1));
}

}  // namespace kronml
