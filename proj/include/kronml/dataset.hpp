#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kronml/characters.hpp"
#include "kronml/kronecker.hpp"
#include "kronml/partitions.hpp"

namespace kronml {

// The three tensor encodings of a triple (lambda, mu, nu):
//   v1: 1 x 3n  concatenation [lambda, mu, nu] (zero-padded)
//   v2: n x 3   row i = (lambda_i, mu_i, nu_i)
//   v3: 6 x n x 3  the v2 slices of all six permutations of the triple, in
//       the order (lmn),(lnm),(mln),(mnl),(nlm),(nml)
enum class Encoding : int { v1 = 1, v2 = 2, v3 = 3 };

std::size_t encoded_len(Encoding a, int n);

// Samples stored row-major in one flat byte buffer; every feature is an
// integer in [0, n], so uint8 is exact for n <= 30.
struct LabeledDataset {
  int n = 0;
  Encoding a = Encoding::v1;
  std::size_t row_len = 0;
  std::vector<std::uint8_t> features;  // rows() * row_len
  std::vector<std::uint8_t> labels;
  // Provenance
  std::uint64_t seed = 0;              // 0 for the raw enumeration
  std::string filter = "depth";        // triple filter in effect

  std::size_t rows() const { return labels.size(); }
  std::span<const std::uint8_t> row(std::size_t r) const {
    return {features.data() + r * row_len, row_len};
  }
  int label(std::size_t r) const { return labels[r]; }
  std::size_t count_label(int cls) const;
};

// All triples of P(n)^3 passing the depth filter, in lexicographic order of
// (index of lambda, index of mu, index of nu).
std::vector<TripleIdx> enumerate_q(const std::vector<Partition>& order);
std::vector<TripleIdx> enumerate_q(int n);

void encode_v1(const Partition& l, const Partition& m, const Partition& nu, std::span<std::uint8_t> out);
void encode_v2(const Partition& l, const Partition& m, const Partition& nu, std::span<std::uint8_t> out);
void encode_v3(const Partition& l, const Partition& m, const Partition& nu, std::span<std::uint8_t> out);
std::vector<std::uint8_t> encode_v1(const Partition& l, const Partition& m, const Partition& nu);
std::vector<std::uint8_t> encode_v2(const Partition& l, const Partition& m, const Partition& nu);
std::vector<std::uint8_t> encode_v3(const Partition& l, const Partition& m, const Partition& nu);

// One sample per element of enumerate_q(n), encoded per a, labeled by the
// Kronecker coefficient's vanishing. Deterministic row order.
LabeledDataset build_dataset(int n, Encoding a, const CharacterTable& table, int threads = 1);

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  bool balanced = true;
};

// Records how a split was made; row indices refer to the source dataset.
struct SplitManifest {
  std::uint64_t seed = 0;
  std::size_t per_class_cap = 0;  // 0 = unlimited
  double train_fraction = 0.7;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> valid_rows;
};

struct SplitResult {
  LabeledDataset train;
  LabeledDataset valid;
  SplitManifest manifest;
};

// Samples min(#class0, #class1, cap) rows per class without replacement
// (cap 0 = unlimited), then splits train_fraction/remainder stratified by
// class so both sides stay balanced. Throws if a class is empty.
// All randomness comes from spec.seed; identical inputs give identical
// splits byte for byte.
SplitResult balance_and_split(const LabeledDataset& d, const SplitSpec& spec,
                              std::size_t per_class_cap = 0);

// Keep a seeded stratified fraction of the rows (used to subsample training
// sets for time); fraction 1.0 returns the input unchanged.
LabeledDataset subsample_rows(const LabeledDataset& d, double fraction, std::uint64_t seed);

// CSV with header "n=<n>,a=<a>,rows=<count>"; one sample per line, features
// in flattening order then the label. Bit-exact round trip.
void save_dataset(const LabeledDataset& d, const std::filesystem::path& file);
LabeledDataset load_dataset(const std::filesystem::path& file);
std::filesystem::path dataset_path(const std::filesystem::path& dir, int n, Encoding a);

void save_manifest(const SplitManifest& m, const std::filesystem::path& file);
SplitManifest load_manifest(const std::filesystem::path& file);

}  // namespace kronml
