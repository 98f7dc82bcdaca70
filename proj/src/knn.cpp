#include "kronml/knn.hpp"

#include <fstream>
#include <stdexcept>

#include "kronml/parallel.hpp"

namespace kronml {

KnnModel knn_fit(const LabeledDataset& train, int k) {
  if (train.a != Encoding::v1) throw std::invalid_argument("knn_fit: requires a v1 dataset");
  if (k < 1 || k % 2 == 0) throw std::invalid_argument("knn_fit: k must be a positive odd integer");
  if (static_cast<std::size_t>(k) > train.rows())
    throw std::invalid_argument("knn_fit: k larger than the training set");
  KnnModel m;
  m.n = train.n;
  m.k = k;
  m.dim = train.row_len;
  m.features = train.features;
  m.labels = train.labels;
  return m;
}

namespace {

inline std::int32_t sq_dist(const std::uint8_t* a, const std::uint8_t* b, std::size_t dim) {
  std::int32_t acc = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    const std::int32_t d = static_cast<std::int32_t>(a[i]) - static_cast<std::int32_t>(b[i]);
    acc += d * d;
  }
  return acc;
}

struct Neighbor {
  std::int32_t dist;
  std::uint32_t idx;
};

// Keeps the k smallest (dist, idx) pairs in ascending lexicographic order;
// the index component is the stated tie-break.
void scan_neighbors(const KnnModel& model, const std::uint8_t* query, Neighbor* best, int k) {
  int filled = 0;
  std::int32_t worst = 0x7fffffff;
  for (std::size_t r = 0; r < model.rows(); ++r) {
    const std::int32_t d = sq_dist(query, model.features.data() + r * model.dim, model.dim);
    if (filled == k && d >= worst) continue;
    // Insertion into the short sorted array.
    int pos = filled < k ? filled : k - 1;
    while (pos > 0 && (best[pos - 1].dist > d)) {
      best[pos] = best[pos - 1];
      --pos;
    }
    best[pos] = {d, static_cast<std::uint32_t>(r)};
    if (filled < k) ++filled;
    if (filled == k) worst = best[k - 1].dist;
  }
}

int vote(const KnnModel& model, const Neighbor* best, int k) {
  int ones = 0;
  for (int i = 0; i < k; ++i) ones += model.labels[best[i].idx];
  return ones * 2 > k ? 1 : 0;
}

}  // namespace

int knn_predict(const KnnModel& model, std::span<const std::uint8_t> x) {
  if (x.size() != model.dim) throw std::invalid_argument("knn_predict: query length mismatch");
  std::vector<Neighbor> best(static_cast<std::size_t>(model.k));
  scan_neighbors(model, x.data(), best.data(), model.k);
  return vote(model, best.data(), model.k);
}

std::vector<std::uint8_t> knn_predict_batch(const KnnModel& model, const LabeledDataset& queries,
                                            int threads) {
  if (queries.row_len != model.dim) throw std::invalid_argument("knn_predict_batch: width mismatch");
  std::vector<std::uint8_t> out(queries.rows());
  parallel_for(0, queries.rows(), threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<Neighbor> best(static_cast<std::size_t>(model.k));
    for (std::size_t q = lo; q < hi; ++q) {
      scan_neighbors(model, queries.row(q).data(), best.data(), model.k);
      out[q] = static_cast<std::uint8_t>(vote(model, best.data(), model.k));
    }
  });
  return out;
}

std::vector<std::uint8_t> knn_neighbor_labels(const KnnModel& model, const LabeledDataset& queries,
                                              int kmax, int threads) {
  if (queries.row_len != model.dim) throw std::invalid_argument("knn_neighbor_labels: width mismatch");
  if (kmax < 1 || static_cast<std::size_t>(kmax) > model.rows())
    throw std::invalid_argument("knn_neighbor_labels: bad kmax");
  std::vector<std::uint8_t> out(queries.rows() * static_cast<std::size_t>(kmax));
  parallel_for(0, queries.rows(), threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<Neighbor> best(static_cast<std::size_t>(kmax));
    for (std::size_t q = lo; q < hi; ++q) {
      scan_neighbors(model, queries.row(q).data(), best.data(), kmax);
      for (int i = 0; i < kmax; ++i)
        out[q * static_cast<std::size_t>(kmax) + static_cast<std::size_t>(i)] = model.labels[best[static_cast<std::size_t>(i)].idx];
    }
  });
  return out;
}

void save_knn(const KnnModel& model, const std::filesystem::path& file) {
  LabeledDataset d;
  d.n = model.n;
  d.a = Encoding::v1;
  d.row_len = model.dim;
  d.features = model.features;
  d.labels = model.labels;
  const std::filesystem::path tmp = file.string() + ".knn.tmp";
  save_dataset(d, tmp);
  std::ifstream in(tmp, std::ios::binary);
  std::ofstream out(file.string() + ".tmp", std::ios::binary);
  out << "k=" << model.k << '\n' << in.rdbuf();
  in.close();
  out.close();
  std::filesystem::remove(tmp);
  std::filesystem::rename(file.string() + ".tmp", file);
}

KnnModel load_knn(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("k=", 0) != 0)
    throw std::runtime_error("bad knn header in " + file.string());
  const int k = std::stoi(line.substr(2));
  const std::filesystem::path tmp = file.string() + ".body.tmp";
  {
    std::ofstream body(tmp, std::ios::binary);
    body << in.rdbuf();
  }
  LabeledDataset d = load_dataset(tmp);
  std::filesystem::remove(tmp);
  return knn_fit(d, k);
}

}  // namespace kronml
