#include "kronml/characters.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "kronml/parallel.hpp"

namespace kronml {

namespace {

// Beta set (first-column hook lengths) of lambda: b_i = lambda_i + L-1-i,
// strictly decreasing. Border strips of size r removable from lambda are in
// bijection with moves b -> b-r where b is a beta, b >= r, and b-r is not a
// beta; the strip height is the number of betas strictly between b-r and b.
std::vector<int> beta_set(const Partition& lambda) {
  const auto& parts = lambda.parts();
  const int rows = lambda.rows();
  std::vector<int> b(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) b[static_cast<std::size_t>(i)] = parts[static_cast<std::size_t>(i)] + rows - 1 - i;
  return b;
}

Partition partition_from_betas(std::vector<int> betas) {
  std::sort(betas.rbegin(), betas.rend());
  const int rows = static_cast<int>(betas.size());
  std::vector<int> parts;
  for (int i = 0; i < rows; ++i) {
    int part = betas[static_cast<std::size_t>(i)] - (rows - 1 - i);
    if (part > 0) parts.push_back(part);
  }
  return Partition(std::move(parts));
}

struct StripRemoval {
  Partition rest;
  int sign;  // +1 or -1
};

std::vector<StripRemoval> strip_removals(const Partition& lambda, int r) {
  std::vector<StripRemoval> out;
  const std::vector<int> betas = beta_set(lambda);
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const int b = betas[i];
    if (b < r) continue;
    const int target = b - r;
    bool occupied = false;
    int height = 0;
    for (std::size_t j = 0; j < betas.size(); ++j) {
      if (betas[j] == target) occupied = true;
      if (betas[j] > target && betas[j] < b) ++height;
    }
    if (occupied) continue;
    std::vector<int> moved = betas;
    moved[i] = target;
    out.push_back({partition_from_betas(std::move(moved)), (height % 2 == 0) ? 1 : -1});
  }
  return out;
}

std::string memo_key(const std::vector<int>& lambda, const std::vector<int>& rho, std::size_t pos) {
  std::string key;
  key.reserve(lambda.size() + rho.size() - pos + 1);
  for (int v : lambda) key.push_back(static_cast<char>(v));
  key.push_back('\x7f');
  for (std::size_t i = pos; i < rho.size(); ++i) key.push_back(static_cast<char>(rho[i]));
  return key;
}

std::int64_t mn_recurse(const Partition& lambda, const std::vector<int>& rho, std::size_t pos,
                        std::unordered_map<std::string, std::int64_t>& memo) {
  if (lambda.rows() == 0) return 1;
  const std::string key = memo_key(lambda.parts(), rho, pos);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  const int r = rho[pos];
  std::int64_t total = 0;
  for (const auto& rem : strip_removals(lambda, r))
    total += rem.sign * mn_recurse(rem.rest, rho, pos + 1, memo);
  memo.emplace(key, total);
  return total;
}

// Partition lists for every degree m <= n; level 0 holds the empty partition.
std::vector<std::vector<Partition>> partition_levels(int n) {
  std::vector<std::vector<Partition>> levels(static_cast<std::size_t>(n) + 1);
  levels[0] = {Partition()};
  for (int m = 1; m <= n; ++m) levels[static_cast<std::size_t>(m)] = enumerate_partitions(m);
  return levels;
}

}  // namespace

std::int64_t factorial(int n) {
  if (n < 0 || n > kMaxCharacterN) throw std::invalid_argument("factorial: n out of range [0, 20]");
  std::int64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

std::int64_t class_size(const Partition& rho) {
  std::int64_t z = 1;
  int mult = 0;
  int prev = 0;
  for (int part : rho.parts()) {
    if (part == prev) {
      ++mult;
    } else {
      prev = part;
      mult = 1;
    }
    z *= part;        // contributes i^{m_i} one factor at a time
    z *= mult;        // contributes m_i! one factor at a time
  }
  return factorial(rho.n()) / z;
}

std::int64_t mn_character(const Partition& lambda, const Partition& rho) {
  if (lambda.n() != rho.n()) throw std::invalid_argument("mn_character: sizes differ");
  thread_local std::unordered_map<std::string, std::int64_t> memo;
  return mn_recurse(lambda, rho.parts(), 0, memo);
}

std::int64_t dimension(const Partition& lambda) {
  const int n = lambda.n();
  if (n == 0) return 1;
  const Partition conj = conjugate(lambda);
  std::int64_t hook_product = 1;
  for (int i = 0; i < lambda.rows(); ++i) {
    for (int j = 0; j < lambda.part(i); ++j) {
      const int hook = (lambda.part(i) - j) + (conj.part(j) - i) - 1;
      hook_product *= hook;
    }
  }
  const std::int64_t nf = factorial(n);
  if (nf % hook_product != 0)
    throw std::runtime_error("dimension: hook product does not divide n!");
  return nf / hook_product;
}

CharacterTable character_table(int n, int threads) {
  if (n < 1 || n > kMaxCharacterN)
    throw std::invalid_argument("character_table: n out of range [1, 20]");
  const auto levels = partition_levels(n);

  // chi for every degree m <= n, built bottom-up. Entry (lambda, rho) at
  // level m sums signed strip removals for rho's largest part, looking up
  // level m - rho_1.
  std::vector<std::vector<std::int64_t>> chi_levels(static_cast<std::size_t>(n) + 1);
  chi_levels[0] = {1};
  for (int m = 1; m <= n; ++m) {
    const auto& parts_m = levels[static_cast<std::size_t>(m)];
    const int p = static_cast<int>(parts_m.size());
    auto& chi = chi_levels[static_cast<std::size_t>(m)];
    chi.assign(static_cast<std::size_t>(p) * static_cast<std::size_t>(p), 0);

    // Per class: largest part and the index of the remaining cycle type.
    std::vector<std::pair<int, int>> class_step(static_cast<std::size_t>(p));
    for (int c = 0; c < p; ++c) {
      const auto& rho = parts_m[static_cast<std::size_t>(c)].parts();
      const int r = rho[0];
      Partition rest(std::vector<int>(rho.begin() + 1, rho.end()));
      const int rest_idx =
          rest.rows() == 0 ? 0 : partition_index(levels[static_cast<std::size_t>(m - r)], rest);
      class_step[static_cast<std::size_t>(c)] = {r, rest_idx};
    }

    const auto& lower = chi_levels;
    auto fill_rows = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t l = lo; l < hi; ++l) {
        const Partition& lambda = parts_m[l];
        // Group classes by largest part so strip removals are enumerated once
        // per distinct r. Classes are reverse-lex ordered, so equal leading
        // parts are contiguous.
        int c = 0;
        while (c < p) {
          const int r = class_step[static_cast<std::size_t>(c)].first;
          const auto removals = strip_removals(lambda, r);
          const int sub = m - r;
          int c2 = c;
          for (; c2 < p && class_step[static_cast<std::size_t>(c2)].first == r; ++c2) {
            const int rest_idx = class_step[static_cast<std::size_t>(c2)].second;
            std::int64_t total = 0;
            const std::size_t sub_p = levels[static_cast<std::size_t>(sub)].size();
            for (const auto& rem : removals) {
              const int sub_row = partition_index(levels[static_cast<std::size_t>(sub)], rem.rest);
              total += rem.sign *
                       lower[static_cast<std::size_t>(sub)]
                            [static_cast<std::size_t>(sub_row) * sub_p + static_cast<std::size_t>(rest_idx)];
            }
            chi[l * static_cast<std::size_t>(p) + static_cast<std::size_t>(c2)] = total;
          }
          c = c2;
        }
      }
    };
    parallel_for(0, static_cast<std::size_t>(p), p >= 32 ? threads : 1, fill_rows);
  }

  CharacterTable table;
  table.n = n;
  table.order = levels[static_cast<std::size_t>(n)];
  table.chi = std::move(chi_levels[static_cast<std::size_t>(n)]);
  table.class_sizes.reserve(table.order.size());
  for (const auto& rho : table.order) table.class_sizes.push_back(class_size(rho));
  return table;
}

bool check_row_orthogonality(const CharacterTable& t) {
  const int p = t.p();
  const __int128 nf = factorial(t.n);
  for (int a = 0; a < p; ++a) {
    for (int b = a; b < p; ++b) {
      __int128 sum = 0;
      for (int c = 0; c < p; ++c)
        sum += static_cast<__int128>(t.class_sizes[static_cast<std::size_t>(c)]) * t.at(a, c) * t.at(b, c);
      if (sum != (a == b ? nf : 0)) return false;
    }
  }
  return true;
}

bool check_column_orthogonality(const CharacterTable& t) {
  const int p = t.p();
  const std::int64_t nf = factorial(t.n);
  for (int c = 0; c < p; ++c) {
    for (int d = c; d < p; ++d) {
      __int128 sum = 0;
      for (int l = 0; l < p; ++l) sum += static_cast<__int128>(t.at(l, c)) * t.at(l, d);
      const __int128 expect = (c == d) ? nf / t.class_sizes[static_cast<std::size_t>(c)] : 0;
      if (sum != expect) return false;
    }
  }
  return true;
}

void save_character_table(const CharacterTable& t, const std::filesystem::path& file) {
  std::ostringstream out;
  out << t.n << ',' << t.p() << '\n';
  for (const auto& part : t.order) {
    const auto& v = part.parts();
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
    out << '\n';
  }
  for (std::int64_t cs : t.class_sizes) out << cs << '\n';
  const int p = t.p();
  for (int r = 0; r < p; ++r) {
    for (int c = 0; c < p; ++c) out << (c ? "," : "") << t.at(r, c);
    out << '\n';
  }
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + file.string());
    f << out.str();
  }
  std::filesystem::rename(tmp, file);
}

namespace {

std::vector<std::int64_t> parse_int_line(const std::string& line, const std::string& file) {
  std::vector<std::int64_t> out;
  const char* p = line.data();
  const char* end = line.data() + line.size();
  while (p < end) {
    std::int64_t v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc()) throw std::runtime_error("bad integer in " + file);
    out.push_back(v);
    p = next;
    if (p < end) {
      if (*p != ',') throw std::runtime_error("bad separator in " + file);
      ++p;
    }
  }
  return out;
}

}  // namespace

CharacterTable load_character_table(const std::filesystem::path& file) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + file.string());
  const std::string name = file.string();
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("truncated table file " + name);
  const auto head = parse_int_line(line, name);
  if (head.size() != 2) throw std::runtime_error("bad header in " + name);
  const int n = static_cast<int>(head[0]);
  const int p = static_cast<int>(head[1]);
  if (n < 1 || n > kMaxCharacterN || p < 1) throw std::runtime_error("bad header in " + name);

  CharacterTable t;
  t.n = n;
  t.order.reserve(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    if (!std::getline(f, line)) throw std::runtime_error("truncated table file " + name);
    const auto parts64 = parse_int_line(line, name);
    std::vector<int> parts(parts64.begin(), parts64.end());
    t.order.emplace_back(Partition(std::move(parts)));
  }
  t.class_sizes.resize(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    if (!std::getline(f, line)) throw std::runtime_error("truncated table file " + name);
    const auto v = parse_int_line(line, name);
    if (v.size() != 1) throw std::runtime_error("bad class size line in " + name);
    t.class_sizes[static_cast<std::size_t>(i)] = v[0];
  }
  t.chi.resize(static_cast<std::size_t>(p) * static_cast<std::size_t>(p));
  for (int r = 0; r < p; ++r) {
    if (!std::getline(f, line)) throw std::runtime_error("truncated table file " + name);
    const auto v = parse_int_line(line, name);
    if (v.size() != static_cast<std::size_t>(p)) throw std::runtime_error("bad row width in " + name);
    std::copy(v.begin(), v.end(), t.chi.begin() + static_cast<std::size_t>(r) * static_cast<std::size_t>(p));
  }

  if (t.order != enumerate_partitions(n))
    throw std::runtime_error("cached table " + name + " has wrong partition order");
  if (!check_row_orthogonality(t) || !check_column_orthogonality(t))
    throw std::runtime_error("cached table " + name + " fails orthogonality");
  return t;
}

std::filesystem::path character_table_path(const std::filesystem::path& dir, int n) {
  char name[32];
  std::snprintf(name, sizeof(name), "chartab_%d.csv", n);
  return dir / name;
}

CharacterTable ensure_character_table(int n, const std::filesystem::path& dir, int threads) {
  const auto file = character_table_path(dir, n);
  if (std::filesystem::exists(file)) return load_character_table(file);
  CharacterTable t = character_table(n, threads);
  std::filesystem::create_directories(dir);
  save_character_table(t, file);
  return t;
}

}  // namespace kronml
