#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kronml/characters.hpp"
#include "kronml/partitions.hpp"

namespace kronml {

// A triple of partitions of the same n, stored as indices into the
// enumerate_partitions order.
struct TripleIdx {
  int i = 0, j = 0, k = 0;
};

// Necessary condition for a nonzero coefficient:
// |d_lambda - d_mu| <= d_nu <= d_lambda + d_mu.
bool depth_filter(const Partition& lambda, const Partition& mu, const Partition& nu);
bool depth_filter(int d_lambda, int d_mu, int d_nu);

// Exact Kronecker coefficient
//   g = (1/n!) * sum_rho |C_rho| chi_lambda(rho) chi_mu(rho) chi_nu(rho),
// accumulated in 128 bits so overflow cannot occur for n <= 20. Throws
// std::runtime_error if the sum is negative or not divisible by n!, which
// would mean a corrupt table.
std::int64_t kron(const Partition& lambda, const Partition& mu, const Partition& nu,
                  const CharacterTable& table);
std::int64_t kron_by_index(const CharacterTable& table, int i, int j, int k);

// 0 if the coefficient vanishes, 1 otherwise.
int label(const Partition& lambda, const Partition& mu, const Partition& nu,
          const CharacterTable& table);

// Batch labels for many triples. Consecutive triples sharing (i, j) reuse
// the pairwise weighted product, so labeling all of Q(n) costs one exact
// dot product per triple. Parallelizes over disjoint output ranges.
std::vector<std::uint8_t> label_batch(const CharacterTable& table,
                                      std::span<const TripleIdx> triples, int threads = 1);

}  // namespace kronml
