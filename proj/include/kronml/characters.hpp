#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "kronml/partitions.hpp"

namespace kronml {

inline constexpr int kMaxCharacterN = 20;

// Exact character table of the symmetric group of degree n. Rows are
// indexed by the irreducible (a partition), columns by the conjugacy class
// (a cycle type); both use the enumerate_partitions order. All entries are
// exact 64-bit integers; nothing in this module touches floating point.
struct CharacterTable {
  int n = 0;
  std::vector<Partition> order;
  std::vector<std::int64_t> class_sizes;  // aligned with order
  std::vector<std::int64_t> chi;          // p*p, row-major

  int p() const { return static_cast<int>(order.size()); }
  std::int64_t at(int row, int col) const {
    return chi[static_cast<std::size_t>(row) * order.size() + static_cast<std::size_t>(col)];
  }
  std::span<const std::int64_t> row(int r) const {
    return {chi.data() + static_cast<std::size_t>(r) * order.size(), order.size()};
  }
};

// n! as int64; n <= 20.
std::int64_t factorial(int n);

// Conjugacy class size n!/z_rho, z_rho = prod_i i^{m_i} m_i!.
std::int64_t class_size(const Partition& rho);

// Character value chi_lambda(rho) by the Murnaghan-Nakayama recursion
// (border strips for the largest remaining cycle part first, signs by strip
// height). Memoized across calls.
std::int64_t mn_character(const Partition& lambda, const Partition& rho);

// Number of standard Young tableaux of shape lambda, by the hook length
// formula. Independent of the MN recursion; used to cross-check it.
std::int64_t dimension(const Partition& lambda);

// Full table for degree n, built bottom-up over all degrees m <= n.
// Row construction parallelizes over irreducibles when threads > 1.
CharacterTable character_table(int n, int threads = 1);

// Exact orthogonality checks (128-bit accumulation).
bool check_row_orthogonality(const CharacterTable& t);
bool check_column_orthogonality(const CharacterTable& t);

// Cache file chartab_<n>.csv. Layout: "n,p(n)"; p(n) lines of partition
// parts defining the order; p(n) lines of class sizes; p(n) rows of p(n)
// character values. The loader re-verifies both orthogonality relations
// and the row order before returning.
void save_character_table(const CharacterTable& t, const std::filesystem::path& file);
CharacterTable load_character_table(const std::filesystem::path& file);
std::filesystem::path character_table_path(const std::filesystem::path& dir, int n);

// Load the cached table if present and valid, else compute and cache it.
CharacterTable ensure_character_table(int n, const std::filesystem::path& dir, int threads = 1);

}  // namespace kronml
