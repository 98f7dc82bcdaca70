#include "kronml/kronecker.hpp"

#include <cstdlib>
#include <stdexcept>

#include "kronml/parallel.hpp"

namespace kronml {

bool depth_filter(int d_lambda, int d_mu, int d_nu) {
  return std::abs(d_lambda - d_mu) <= d_nu && d_nu <= d_lambda + d_mu;
}

bool depth_filter(const Partition& lambda, const Partition& mu, const Partition& nu) {
  return depth_filter(depth(lambda), depth(mu), depth(nu));
}

namespace {

std::int64_t finish_kron(__int128 sum, std::int64_t nf) {
  if (sum < 0 || sum % nf != 0)
    throw std::runtime_error("kron: character sum not a nonnegative multiple of n! (corrupt table)");
  return static_cast<std::int64_t>(sum / nf);
}

}  // namespace

std::int64_t kron_by_index(const CharacterTable& table, int i, int j, int k) {
  const int p = table.p();
  __int128 sum = 0;
  const auto ri = table.row(i);
  const auto rj = table.row(j);
  const auto rk = table.row(k);
  for (int c = 0; c < p; ++c) {
    const std::size_t cc = static_cast<std::size_t>(c);
    sum += static_cast<__int128>(table.class_sizes[cc]) * ri[cc] * rj[cc] * rk[cc];
  }
  return finish_kron(sum, factorial(table.n));
}

std::int64_t kron(const Partition& lambda, const Partition& mu, const Partition& nu,
                  const CharacterTable& table) {
  if (lambda.n() != table.n || mu.n() != table.n || nu.n() != table.n)
    throw std::invalid_argument("kron: partitions do not match the table degree");
  return kron_by_index(table, partition_index(table.order, lambda),
                       partition_index(table.order, mu), partition_index(table.order, nu));
}

int label(const Partition& lambda, const Partition& mu, const Partition& nu,
          const CharacterTable& table) {
  return kron(lambda, mu, nu, table) == 0 ? 0 : 1;
}

std::vector<std::uint8_t> label_batch(const CharacterTable& table,
                                      std::span<const TripleIdx> triples, int threads) {
  const int p = table.p();
  const std::int64_t nf = factorial(table.n);
  std::vector<std::uint8_t> labels(triples.size());

  parallel_for(0, triples.size(), threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<__int128> pair_product(static_cast<std::size_t>(p));
    int cur_i = -1, cur_j = -1;
    for (std::size_t t = lo; t < hi; ++t) {
      const TripleIdx& tr = triples[t];
      if (tr.i != cur_i || tr.j != cur_j) {
        cur_i = tr.i;
        cur_j = tr.j;
        const auto ri = table.row(cur_i);
        const auto rj = table.row(cur_j);
        for (int c = 0; c < p; ++c) {
          const std::size_t cc = static_cast<std::size_t>(c);
          pair_product[cc] = static_cast<__int128>(table.class_sizes[cc]) * ri[cc] * rj[cc];
        }
      }
      const auto rk = table.row(tr.k);
      __int128 sum = 0;
      for (int c = 0; c < p; ++c) sum += pair_product[static_cast<std::size_t>(c)] * rk[static_cast<std::size_t>(c)];
      labels[t] = finish_kron(sum, nf) == 0 ? 0 : 1;
    }
  });
  return labels;
}

}  // namespace kronml
