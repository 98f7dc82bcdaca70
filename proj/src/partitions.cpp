#include "kronml/partitions.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace kronml {

Partition::Partition(std::vector<int> parts) : parts_(std::move(parts)) {
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (parts_[i] < 1) throw std::invalid_argument("partition parts must be positive");
    if (i > 0 && parts_[i] > parts_[i - 1])
      throw std::invalid_argument("partition parts must be weakly decreasing");
  }
  n_ = std::accumulate(parts_.begin(), parts_.end(), 0);
}

std::vector<Partition> enumerate_partitions(int n) {
  if (n < 1 || n > kMaxEnumerationN)
    throw std::invalid_argument("enumerate_partitions: n out of range [1, 30]");
  std::vector<Partition> out;
  std::vector<int> cur{n};
  for (;;) {
    out.emplace_back(Partition(cur));
    // Rightmost part > 1; everything after it is a run of ones.
    int k = static_cast<int>(cur.size()) - 1;
    while (k >= 0 && cur[k] == 1) --k;
    if (k < 0) break;
    int rem = static_cast<int>(cur.size()) - 1 - k + 1;  // ones plus the unit taken below
    int v = cur[k] - 1;
    cur.resize(static_cast<std::size_t>(k));
    cur.push_back(v);
    // Largest tail with parts <= v: floor(rem/v) copies of v, then the rest.
    while (rem > 0) {
      int m = std::min(v, rem);
      cur.push_back(m);
      rem -= m;
    }
  }
  return out;
}

int depth(const Partition& lambda) { return lambda.n() - lambda.first(); }

std::vector<int> pad(const Partition& lambda, int n) {
  if (lambda.n() != n) throw std::invalid_argument("pad: partition does not sum to n");
  std::vector<int> out(static_cast<std::size_t>(n), 0);
  std::copy(lambda.parts().begin(), lambda.parts().end(), out.begin());
  return out;
}

Partition conjugate(const Partition& lambda) {
  std::vector<int> cols(static_cast<std::size_t>(lambda.first()), 0);
  for (int part : lambda.parts())
    for (int j = 0; j < part; ++j) ++cols[static_cast<std::size_t>(j)];
  return Partition(std::move(cols));
}

int partition_index(const std::vector<Partition>& order, const Partition& p) {
  // Reverse-lex order is descending lexicographic on the parts.
  auto it = std::lower_bound(order.begin(), order.end(), p,
                             [](const Partition& a, const Partition& b) { return a > b; });
  if (it == order.end() || !(*it == p))
    throw std::invalid_argument("partition_index: partition not in order list");
  return static_cast<int>(it - order.begin());
}

}  // namespace kronml
