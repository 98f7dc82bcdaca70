#include "kronml/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "kronml/parallel.hpp"
#include "kronml/rng.hpp"

namespace kronml {

std::size_t encoded_len(Encoding a, int n) {
  switch (a) {
    case Encoding::v1:
    case Encoding::v2:
      return 3 * static_cast<std::size_t>(n);
    case Encoding::v3:
      return 18 * static_cast<std::size_t>(n);
  }
  throw std::invalid_argument("encoded_len: bad encoding");
}

std::size_t LabeledDataset::count_label(int cls) const {
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), static_cast<std::uint8_t>(cls)));
}

std::vector<TripleIdx> enumerate_q(const std::vector<Partition>& order) {
  const int p = static_cast<int>(order.size());
  std::vector<int> depths(order.size());
  for (int i = 0; i < p; ++i) depths[static_cast<std::size_t>(i)] = depth(order[static_cast<std::size_t>(i)]);
  std::vector<TripleIdx> out;
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < p; ++k)
        if (depth_filter(depths[static_cast<std::size_t>(i)], depths[static_cast<std::size_t>(j)],
                         depths[static_cast<std::size_t>(k)]))
          out.push_back({i, j, k});
  return out;
}

std::vector<TripleIdx> enumerate_q(int n) { return enumerate_q(enumerate_partitions(n)); }

namespace {

void write_padded(const Partition& p, int n, std::uint8_t* out, std::size_t stride) {
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i) * stride] = static_cast<std::uint8_t>(p.part(i));
}

void check_common_n(const Partition& l, const Partition& m, const Partition& nu) {
  if (l.n() != m.n() || l.n() != nu.n())
    throw std::invalid_argument("encode: partitions must share n");
}

}  // namespace

void encode_v1(const Partition& l, const Partition& m, const Partition& nu, std::span<std::uint8_t> out) {
  check_common_n(l, m, nu);
  const int n = l.n();
  write_padded(l, n, out.data(), 1);
  write_padded(m, n, out.data() + n, 1);
  write_padded(nu, n, out.data() + 2 * n, 1);
}

void encode_v2(const Partition& l, const Partition& m, const Partition& nu, std::span<std::uint8_t> out) {
  check_common_n(l, m, nu);
  const int n = l.n();
  // Row i = (lambda_i, mu_i, nu_i); the padded partitions are the columns.
  write_padded(l, n, out.data() + 0, 3);
  write_padded(m, n, out.data() + 1, 3);
  write_padded(nu, n, out.data() + 2, 3);
}

void encode_v3(const Partition& l, const Partition& m, const Partition& nu, std::span<std::uint8_t> out) {
  check_common_n(l, m, nu);
  const int n = l.n();
  const std::size_t slice = 3 * static_cast<std::size_t>(n);
  const Partition* perms[6][3] = {{&l, &m, &nu}, {&l, &nu, &m}, {&m, &l, &nu},
                                  {&m, &nu, &l}, {&nu, &l, &m}, {&nu, &m, &l}};
  for (int s = 0; s < 6; ++s)
    for (int col = 0; col < 3; ++col)
      write_padded(*perms[s][col], n, out.data() + static_cast<std::size_t>(s) * slice + static_cast<std::size_t>(col), 3);
}

std::vector<std::uint8_t> encode_v1(const Partition& l, const Partition& m, const Partition& nu) {
  std::vector<std::uint8_t> out(encoded_len(Encoding::v1, l.n()));
  encode_v1(l, m, nu, out);
  return out;
}
std::vector<std::uint8_t> encode_v2(const Partition& l, const Partition& m, const Partition& nu) {
  std::vector<std::uint8_t> out(encoded_len(Encoding::v2, l.n()));
  encode_v2(l, m, nu, out);
  return out;
}
std::vector<std::uint8_t> encode_v3(const Partition& l, const Partition& m, const Partition& nu) {
  std::vector<std::uint8_t> out(encoded_len(Encoding::v3, l.n()));
  encode_v3(l, m, nu, out);
  return out;
}

LabeledDataset build_dataset(int n, Encoding a, const CharacterTable& table, int threads) {
  if (table.n != n) throw std::invalid_argument("build_dataset: table degree mismatch");
  const auto triples = enumerate_q(table.order);

  LabeledDataset d;
  d.n = n;
  d.a = a;
  d.row_len = encoded_len(a, n);
  d.labels = label_batch(table, triples, threads);
  d.features.resize(triples.size() * d.row_len);

  const auto& order = table.order;
  parallel_for(0, triples.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      const TripleIdx& tr = triples[t];
      std::span<std::uint8_t> out{d.features.data() + t * d.row_len, d.row_len};
      const Partition& l = order[static_cast<std::size_t>(tr.i)];
      const Partition& m = order[static_cast<std::size_t>(tr.j)];
      const Partition& nu = order[static_cast<std::size_t>(tr.k)];
      switch (a) {
        case Encoding::v1: encode_v1(l, m, nu, out); break;
        case Encoding::v2: encode_v2(l, m, nu, out); break;
        case Encoding::v3: encode_v3(l, m, nu, out); break;
      }
    }
  });
  return d;
}

namespace {

LabeledDataset gather_rows(const LabeledDataset& d, const std::vector<std::size_t>& rows,
                           std::uint64_t seed) {
  LabeledDataset out;
  out.n = d.n;
  out.a = d.a;
  out.row_len = d.row_len;
  out.seed = seed;
  out.filter = d.filter;
  out.features.resize(rows.size() * d.row_len);
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = d.row(rows[i]);
    std::copy(src.begin(), src.end(), out.features.begin() + i * d.row_len);
    out.labels[i] = d.labels[rows[i]];
  }
  return out;
}

}  // namespace

SplitResult balance_and_split(const LabeledDataset& d, const SplitSpec& spec,
                              std::size_t per_class_cap) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t r = 0; r < d.rows(); ++r) by_class[d.labels[r]].push_back(r);
  if (by_class[0].empty() || by_class[1].empty())
    throw std::runtime_error("balance_and_split: a class is empty");

  // One shuffle per class; the first `take` entries are the selected rows,
  // and of those the first `train_count` go to train.
  Rng rng0(derive_seed(spec.seed, "balance.class0"));
  Rng rng1(derive_seed(spec.seed, "balance.class1"));
  rng0.shuffle(by_class[0]);
  rng1.shuffle(by_class[1]);

  SplitManifest manifest;
  manifest.seed = spec.seed;
  manifest.per_class_cap = per_class_cap;
  manifest.train_fraction = spec.train_fraction;

  for (int cls = 0; cls < 2; ++cls) {
    std::size_t take = by_class[cls].size();
    if (spec.balanced) take = std::min(by_class[0].size(), by_class[1].size());
    if (per_class_cap > 0) take = std::min(take, per_class_cap);
    const auto train_count =
        static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(take)));
    for (std::size_t i = 0; i < take; ++i) {
      if (i < train_count)
        manifest.train_rows.push_back(by_class[cls][i]);
      else
        manifest.valid_rows.push_back(by_class[cls][i]);
    }
  }

  // Mix the two classes in the train row order so mini-batch consumers do
  // not see class-sorted data.
  Rng mix(derive_seed(spec.seed, "split.mix"));
  mix.shuffle(manifest.train_rows);

  SplitResult res;
  res.train = gather_rows(d, manifest.train_rows, spec.seed);
  res.valid = gather_rows(d, manifest.valid_rows, spec.seed);
  res.manifest = std::move(manifest);
  return res;
}

LabeledDataset subsample_rows(const LabeledDataset& d, double fraction, std::uint64_t seed) {
  if (fraction >= 1.0) return d;
  if (fraction <= 0.0) throw std::invalid_argument("subsample_rows: fraction must be positive");
  std::vector<std::size_t> by_class[2];
  for (std::size_t r = 0; r < d.rows(); ++r) by_class[d.labels[r]].push_back(r);
  std::vector<std::size_t> keep;
  for (int cls = 0; cls < 2; ++cls) {
    Rng rng(derive_seed(seed, cls == 0 ? "subsample.class0" : "subsample.class1"));
    rng.shuffle(by_class[cls]);
    const auto take =
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(by_class[cls].size())));
    keep.insert(keep.end(), by_class[cls].begin(), by_class[cls].begin() + static_cast<std::ptrdiff_t>(take));
  }
  Rng mix(derive_seed(seed, "subsample.mix"));
  mix.shuffle(keep);
  return gather_rows(d, keep, seed);
}

void save_dataset(const LabeledDataset& d, const std::filesystem::path& file) {
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + file.string());
    std::string buf;
    buf.reserve(1 << 22);
    char head[96];
    std::snprintf(head, sizeof(head), "n=%d,a=%d,rows=%zu\n", d.n, static_cast<int>(d.a), d.rows());
    buf += head;
    char num[16];
    for (std::size_t r = 0; r < d.rows(); ++r) {
      const auto row = d.row(r);
      for (std::size_t c = 0; c < d.row_len; ++c) {
        auto [p, ec] = std::to_chars(num, num + sizeof(num), static_cast<int>(row[c]));
        buf.append(num, p);
        buf.push_back(',');
      }
      buf.push_back(static_cast<char>('0' + d.labels[r]));
      buf.push_back('\n');
      if (buf.size() > (1 << 22) - 4096) {
        f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        buf.clear();
      }
    }
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("write failed for " + file.string());
  }
  std::filesystem::rename(tmp, file);
}

LabeledDataset load_dataset(const std::filesystem::path& file) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + file.string());
  const std::string name = file.string();
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty dataset file " + name);
  int n = 0, a = 0;
  std::size_t rows = 0;
  if (std::sscanf(line.c_str(), "n=%d,a=%d,rows=%zu", &n, &a, &rows) != 3)
    throw std::runtime_error("bad dataset header in " + name);
  if (a < 1 || a > 3) throw std::runtime_error("bad encoding in " + name);

  LabeledDataset d;
  d.n = n;
  d.a = static_cast<Encoding>(a);
  d.row_len = encoded_len(d.a, n);
  d.features.reserve(rows * d.row_len);
  d.labels.reserve(rows);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    std::size_t count = 0;
    int last = -1;
    while (p < end) {
      int v = 0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw std::runtime_error("bad integer in " + name);
      p = next;
      if (p < end && *p == ',') {
        d.features.push_back(static_cast<std::uint8_t>(v));
        ++count;
        ++p;
      } else {
        last = v;
        break;
      }
    }
    if (count != d.row_len || last < 0 || last > 1)
      throw std::runtime_error("bad row in " + name);
    d.labels.push_back(static_cast<std::uint8_t>(last));
  }
  if (d.rows() != rows) throw std::runtime_error("row count mismatch in " + name);
  return d;
}

std::filesystem::path dataset_path(const std::filesystem::path& dir, int n, Encoding a) {
  char name[48];
  std::snprintf(name, sizeof(name), "dataset_n%d_v%d.csv", n, static_cast<int>(a));
  return dir / name;
}

void save_manifest(const SplitManifest& m, const std::filesystem::path& file) {
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + file.string());
    f << "seed=" << m.seed << ",cap=" << m.per_class_cap << ",fraction=" << m.train_fraction << '\n';
    f << "train=" << m.train_rows.size() << '\n';
    for (auto r : m.train_rows) f << r << '\n';
    f << "valid=" << m.valid_rows.size() << '\n';
    for (auto r : m.valid_rows) f << r << '\n';
  }
  std::filesystem::rename(tmp, file);
}

SplitManifest load_manifest(const std::filesystem::path& file) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + file.string());
  SplitManifest m;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty manifest " + file.string());
  unsigned long long seed = 0;
  if (std::sscanf(line.c_str(), "seed=%llu,cap=%zu,fraction=%lf", &seed, &m.per_class_cap,
                  &m.train_fraction) != 3)
    throw std::runtime_error("bad manifest header in " + file.string());
  m.seed = seed;
  auto read_block = [&](const char* tag, std::vector<std::size_t>& out) {
    if (!std::getline(f, line)) throw std::runtime_error("truncated manifest " + file.string());
    std::size_t count = 0;
    char fmt[16];
    std::snprintf(fmt, sizeof(fmt), "%s=%%zu", tag);
    if (std::sscanf(line.c_str(), fmt, &count) != 1)
      throw std::runtime_error("bad manifest block in " + file.string());
    out.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      if (!std::getline(f, line)) throw std::runtime_error("truncated manifest " + file.string());
      out[i] = std::stoull(line);
    }
  };
  read_block("train", m.train_rows);
  read_block("valid", m.valid_rows);
  return m;
}

}  // namespace kronml
