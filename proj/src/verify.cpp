#include "kronml/verify.hpp"

#include <algorithm>
#include <cstdio>

#include "kronml/dataset.hpp"
#include "kronml/kronecker.hpp"
#include "kronml/rng.hpp"

namespace kronml {

namespace {

std::string sprint(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

// Class sign: (-1)^(n - #parts).
int class_sign(const Partition& rho) { return (rho.n() - rho.rows()) % 2 == 0 ? 1 : -1; }

CheckResult check_partitions_order(int max_n) {
  // Known p(n) values for n = 1..14.
  static const std::size_t pn[] = {1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77, 101, 135};
  for (int n = 1; n <= std::min(max_n, 14); ++n) {
    const auto parts = enumerate_partitions(n);
    if (parts.size() != pn[n - 1])
      return {"partitions.order", false, sprint("p(%d) = %zu, expected %zu", n, parts.size(), pn[n - 1])};
    if (!(parts.front() == Partition(std::vector<int>{n})))
      return {"partitions.order", false, sprint("first partition of %d is not (n)", n)};
    if (parts.back().first() != 1)
      return {"partitions.order", false, sprint("last partition of %d is not (1^n)", n)};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i)
      if (!(parts[i] > parts[i + 1]))
        return {"partitions.order", false, sprint("order not strictly reverse-lex at n=%d", n)};
    for (const auto& p : parts)
      if (p.n() != n) return {"partitions.order", false, sprint("sum mismatch at n=%d", n)};
  }
  return {"partitions.order", true, "reverse-lex, complete, duplicate-free"};
}

CheckResult check_conjugate_involution(int max_n) {
  for (int n = 1; n <= max_n; ++n)
    for (const auto& p : enumerate_partitions(n))
      if (!(conjugate(conjugate(p)) == p))
        return {"partitions.conjugate_involution", false, sprint("failed at n=%d", n)};
  return {"partitions.conjugate_involution", true, sprint("all n <= %d", max_n)};
}

CheckResult check_pad_depth(int max_n) {
  for (int n = 1; n <= max_n; ++n) {
    for (const auto& p : enumerate_partitions(n)) {
      const auto padded = pad(p, n);
      if (static_cast<int>(padded.size()) != n)
        return {"partitions.pad_strip", false, "padded length wrong"};
      std::vector<int> stripped;
      for (int v : padded)
        if (v > 0) stripped.push_back(v);
      if (!(Partition(stripped) == p)) return {"partitions.pad_strip", false, "pad/strip not identity"};
      const bool d0 = depth(p) == 0, is_row = p == Partition(std::vector<int>{n});
      const bool dmax = depth(p) == n - 1, is_col = p.first() == 1;
      if (d0 != is_row || dmax != is_col)
        return {"partitions.pad_strip", false, "depth boundary characterization failed"};
    }
  }
  return {"partitions.pad_strip", true, sprint("all n <= %d", max_n)};
}

CheckResult check_orthogonality(int max_n, int threads) {
  for (int n = 1; n <= max_n; ++n) {
    const auto t = character_table(n, threads);
    if (!check_row_orthogonality(t))
      return {"characters.orthogonality", false, sprint("row orthogonality failed at n=%d", n)};
    if (!check_column_orthogonality(t))
      return {"characters.orthogonality", false, sprint("column orthogonality failed at n=%d", n)};
  }
  return {"characters.orthogonality", true, sprint("rows and columns exact, n <= %d", max_n)};
}

CheckResult check_hook_dimensions(int max_n, int threads) {
  for (int n = 1; n <= max_n; ++n) {
    const auto t = character_table(n, threads);
    const int identity_col = t.p() - 1;  // (1^n) is last in reverse-lex order
    for (int l = 0; l < t.p(); ++l)
      if (t.at(l, identity_col) != dimension(t.order[static_cast<std::size_t>(l)]))
        return {"characters.hook_dimensions", false, sprint("mismatch at n=%d row %d", n, l)};
  }
  return {"characters.hook_dimensions", true, sprint("chi(identity) = hook dimension, n <= %d", max_n)};
}

CheckResult check_sign_twist(int max_n, int threads) {
  for (int n = 1; n <= max_n; ++n) {
    const auto t = character_table(n, threads);
    for (int l = 0; l < t.p(); ++l) {
      const int lc = partition_index(t.order, conjugate(t.order[static_cast<std::size_t>(l)]));
      for (int c = 0; c < t.p(); ++c)
        if (t.at(lc, c) != class_sign(t.order[static_cast<std::size_t>(c)]) * t.at(l, c))
          return {"characters.sign_twist", false, sprint("failed at n=%d (%d,%d)", n, l, c)};
    }
  }
  return {"characters.sign_twist", true, sprint("conjugate row = sign * row, n <= %d", max_n)};
}

CheckResult check_contrapositive(int max_n, int threads) {
  for (int n = 1; n <= std::min(max_n, 8); ++n) {
    const auto t = character_table(n, threads);
    const int p = t.p();
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k) {
          if (depth_filter(t.order[static_cast<std::size_t>(i)], t.order[static_cast<std::size_t>(j)],
                           t.order[static_cast<std::size_t>(k)]))
            continue;
          if (kron_by_index(t, i, j, k) != 0)
            return {"kronecker.depth_contrapositive", false,
                    sprint("nonzero coefficient outside the filter at n=%d", n)};
        }
  }
  return {"kronecker.depth_contrapositive", true,
          sprint("exhaustive for n <= %d", std::min(max_n, 8))};
}

CheckResult check_permutation_symmetry(int max_n, std::uint64_t seed, int threads, int triples) {
  for (int n = 2; n <= std::min(max_n, 12); ++n) {
    const auto t = character_table(n, threads);
    Rng rng(derive_seed(seed, "verify.permsym" + std::to_string(n)));
    const auto p = static_cast<std::uint64_t>(t.p());
    for (int s = 0; s < triples; ++s) {
      const int i = static_cast<int>(rng.below(p));
      const int j = static_cast<int>(rng.below(p));
      const int k = static_cast<int>(rng.below(p));
      const std::int64_t g = kron_by_index(t, i, j, k);
      const int perms[6][3] = {{i, j, k}, {i, k, j}, {j, i, k}, {j, k, i}, {k, i, j}, {k, j, i}};
      for (const auto& q : perms)
        if (kron_by_index(t, q[0], q[1], q[2]) != g)
          return {"kronecker.permutation_symmetry", false, sprint("violated at n=%d", n)};
    }
  }
  return {"kronecker.permutation_symmetry", true,
          sprint("%d random triples per n <= %d", triples, std::min(max_n, 12))};
}

CheckResult check_conjugation_twist(int max_n, std::uint64_t seed, int threads, int triples) {
  for (int n = 2; n <= std::min(max_n, 10); ++n) {
    const auto t = character_table(n, threads);
    Rng rng(derive_seed(seed, "verify.conj" + std::to_string(n)));
    const auto p = static_cast<std::uint64_t>(t.p());
    for (int s = 0; s < triples; ++s) {
      const int i = static_cast<int>(rng.below(p));
      const int j = static_cast<int>(rng.below(p));
      const int k = static_cast<int>(rng.below(p));
      const int ic = partition_index(t.order, conjugate(t.order[static_cast<std::size_t>(i)]));
      const int jc = partition_index(t.order, conjugate(t.order[static_cast<std::size_t>(j)]));
      if (kron_by_index(t, i, j, k) != kron_by_index(t, ic, jc, k))
        return {"kronecker.conjugation_twist", false, sprint("violated at n=%d", n)};
    }
  }
  return {"kronecker.conjugation_twist", true,
          sprint("%d random triples per n <= %d", triples, std::min(max_n, 10))};
}

CheckResult check_dimension_sum_rule(int max_n, std::uint64_t seed, int threads, int pairs) {
  for (int n = 2; n <= std::min(max_n, 12); ++n) {
    const auto t = character_table(n, threads);
    Rng rng(derive_seed(seed, "verify.dimsum" + std::to_string(n)));
    const auto p = static_cast<std::uint64_t>(t.p());
    std::vector<std::int64_t> dims(t.order.size());
    for (std::size_t l = 0; l < t.order.size(); ++l) dims[l] = dimension(t.order[l]);
    for (int s = 0; s < pairs; ++s) {
      const int i = static_cast<int>(rng.below(p));
      const int j = static_cast<int>(rng.below(p));
      __int128 total = 0;
      for (int k = 0; k < t.p(); ++k)
        total += static_cast<__int128>(kron_by_index(t, i, j, k)) * dims[static_cast<std::size_t>(k)];
      if (total != static_cast<__int128>(dims[static_cast<std::size_t>(i)]) * dims[static_cast<std::size_t>(j)])
        return {"kronecker.dimension_sum_rule", false, sprint("violated at n=%d", n)};
    }
  }
  return {"kronecker.dimension_sum_rule", true,
          sprint("%d random pairs per n <= %d", pairs, std::min(max_n, 12))};
}

CheckResult check_q_counts(bool full, int threads) {
  if (enumerate_q(1).size() != 1) return {"dataset.q_counts", false, "#Q(1) != 1"};
  if (!full) return {"dataset.q_counts", true, "#Q(1) = 1"};
  const auto order12 = enumerate_partitions(12);
  if (order12.size() * order12.size() * order12.size() != 456533)
    return {"dataset.q_counts", false, "p(12)^3 != 456533"};
  const auto q12 = enumerate_q(order12);
  if (q12.size() != 406919)
    return {"dataset.q_counts", false, sprint("#Q(12) = %zu, expected 406919", q12.size())};
  const auto t12 = character_table(12, threads);
  const auto labels = label_batch(t12, q12, threads);
  const auto ones = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (ones != 280009 || labels.size() - ones != 126910)
    return {"dataset.q_counts", false,
            sprint("n=12 labels: ones=%zu zeros=%zu", ones, labels.size() - ones)};
  if (enumerate_q(14).size() != 2258526)
    return {"dataset.q_counts", false, "#Q(14) != 2258526"};
  return {"dataset.q_counts", true, "#Q(1), #Q(12) with label counts, #Q(14)"};
}

CheckResult check_dataset_determinism(int threads) {
  const auto t = character_table(6, threads);
  const auto d1 = build_dataset(6, Encoding::v1, t, threads);
  const auto d2 = build_dataset(6, Encoding::v1, t, 1);
  if (d1.features != d2.features || d1.labels != d2.labels)
    return {"dataset.determinism", false, "rebuild differs"};
  SplitSpec spec{0.7, 42, true};
  const auto s1 = balance_and_split(d1, spec);
  const auto s2 = balance_and_split(d1, spec);
  if (s1.manifest.train_rows != s2.manifest.train_rows ||
      s1.manifest.valid_rows != s2.manifest.valid_rows)
    return {"dataset.determinism", false, "split differs under the same seed"};
  return {"dataset.determinism", true, "rebuild and resplit are identical"};
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(const VerifyOptions& opt) {
  const int max_n = opt.max_n > 0 ? opt.max_n : (opt.full ? 14 : 8);
  const int triples = 1000, pairs = 100;
  std::vector<CheckResult> out;
  out.push_back(check_partitions_order(std::max(max_n, 14)));
  out.push_back(check_conjugate_involution(std::min(max_n, 14)));
  out.push_back(check_pad_depth(std::min(max_n, 14)));
  out.push_back(check_orthogonality(max_n, opt.threads));
  out.push_back(check_hook_dimensions(max_n, opt.threads));
  out.push_back(check_sign_twist(max_n, opt.threads));
  out.push_back(check_contrapositive(max_n, opt.threads));
  out.push_back(check_permutation_symmetry(max_n, opt.seed, opt.threads, triples));
  out.push_back(check_conjugation_twist(max_n, opt.seed, opt.threads, triples));
  out.push_back(check_dimension_sum_rule(max_n, opt.seed, opt.threads, pairs));
  out.push_back(check_q_counts(opt.full, opt.threads));
  out.push_back(check_dataset_determinism(opt.threads));
  return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
}

}  // namespace kronml
