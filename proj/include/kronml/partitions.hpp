#pragma once

#include <compare>
#include <cstddef>
#include <vector>

namespace kronml {

inline constexpr int kMaxEnumerationN = 30;

// Integer partition: weakly decreasing positive parts. The empty partition
// (n = 0) is allowed as a value; enumeration starts at n = 1.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<int> parts);  // validates, throws std::invalid_argument

  int n() const { return n_; }
  int rows() const { return static_cast<int>(parts_.size()); }
  const std::vector<int>& parts() const { return parts_; }

  // Part at 1-based-row i (0-based index); zero beyond the last row.
  int part(int i) const {
    return i < rows() ? parts_[static_cast<std::size_t>(i)] : 0;
  }
  int first() const { return parts_.empty() ? 0 : parts_[0]; }

  bool operator==(const Partition& o) const { return parts_ == o.parts_; }
  // Lexicographic on parts; enumeration order is the reverse of this.
  auto operator<=>(const Partition& o) const { return parts_ <=> o.parts_; }

 private:
  std::vector<int> parts_;
  int n_ = 0;
};

// All partitions of n in reverse-lexicographic order: (n) first, (1^n) last.
// Dataset row order and character-table indexing inherit this order.
std::vector<Partition> enumerate_partitions(int n);

// n - lambda_1.
int depth(const Partition& lambda);

// Length-n vector: the parts followed by zeros. Throws if lambda does not
// sum to n.
std::vector<int> pad(const Partition& lambda, int n);

// Transpose of the Young diagram.
Partition conjugate(const Partition& lambda);

// Index of p in the enumerate_partitions order; throws if absent.
int partition_index(const std::vector<Partition>& order, const Partition& p);

}  // namespace kronml
