#include "kronml/gbdt.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "kronml/metrics.hpp"
#include "kronml/parallel.hpp"
#include "kronml/rng.hpp"

namespace kronml {

int GbdtTree::leaf_count() const {
  int leaves = 0;
  for (const auto& n : nodes) leaves += n.feature < 0;
  return leaves;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<std::uint8_t> make_bin_edges(const LabeledDataset& d, int feature, int max_bin) {
  bool seen[256] = {};
  for (std::size_t r = 0; r < d.rows(); ++r) seen[d.row(static_cast<std::size_t>(r))[static_cast<std::size_t>(feature)]] = true;
  std::vector<std::uint8_t> edges;
  for (int v = 0; v < 256; ++v)
    if (seen[v]) edges.push_back(static_cast<std::uint8_t>(v));
  if (static_cast<int>(edges.size()) > max_bin) {
    // Equal-stride merge down to max_bin edges; integer features in [0, n]
    // never reach this.
    std::vector<std::uint8_t> merged;
    for (int b = 0; b < max_bin; ++b)
      merged.push_back(edges[static_cast<std::size_t>(b) * edges.size() / static_cast<std::size_t>(max_bin)]);
    edges = std::move(merged);
  }
  return edges;
}

// Index of the greatest edge <= x; values below every edge map to bin 0.
inline int bin_of(const std::vector<std::uint8_t>& edges, std::uint8_t x) {
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  return it == edges.begin() ? 0 : static_cast<int>(it - edges.begin()) - 1;
}

struct HistEntry {
  double g = 0.0;
  double h = 0.0;
  int count = 0;
};

struct SplitInfo {
  double gain = 0.0;
  int feature = -1;
  int threshold = -1;
  double left_g = 0.0, left_h = 0.0;
  int left_count = 0;
};

struct LeafState {
  int node_id = 0;
  std::size_t begin = 0, end = 0;  // range in the bag row array
  double sum_g = 0.0, sum_h = 0.0;
  std::vector<HistEntry> hist;     // total_bins entries
  SplitInfo best;
  bool open = true;
};

struct Binned {
  // Column-major copy for histograms, row-major for traversal.
  std::vector<std::uint8_t> by_feature;  // f * rows + r
  std::vector<std::uint8_t> by_row;      // r * features + f
  std::size_t rows = 0;
  int features = 0;

  std::uint8_t at(std::size_t r, int f) const { return by_row[r * static_cast<std::size_t>(features) + static_cast<std::size_t>(f)]; }
};

Binned bin_dataset(const LabeledDataset& d, const std::vector<std::vector<std::uint8_t>>& edges) {
  Binned b;
  b.rows = d.rows();
  b.features = static_cast<int>(d.row_len);
  b.by_feature.resize(b.rows * static_cast<std::size_t>(b.features));
  b.by_row.resize(b.rows * static_cast<std::size_t>(b.features));
  for (std::size_t r = 0; r < b.rows; ++r) {
    const auto row = d.row(r);
    for (int f = 0; f < b.features; ++f) {
      const auto bv = static_cast<std::uint8_t>(bin_of(edges[static_cast<std::size_t>(f)], row[static_cast<std::size_t>(f)]));
      b.by_row[r * static_cast<std::size_t>(b.features) + static_cast<std::size_t>(f)] = bv;
      b.by_feature[static_cast<std::size_t>(f) * b.rows + r] = bv;
    }
  }
  return b;
}

int traverse(const GbdtTree& tree, const std::uint8_t* bins) {
  int id = 0;
  while (tree.nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(id)];
    id = bins[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return id;
}

class TreeGrower {
 public:
  TreeGrower(const Binned& data, const std::vector<int>& bin_offsets, int total_bins,
             const GbdtConfig& cfg, int threads)
      : data_(data), bin_offsets_(bin_offsets), total_bins_(total_bins), cfg_(cfg),
        threads_(threads) {}

  GbdtTree grow(std::span<const std::uint32_t> bag, std::span<const double> grad,
                std::span<const double> hess, const std::vector<int>& features) {
    rows_.assign(bag.begin(), bag.end());
    scratch_.resize(rows_.size());
    grad_ = grad;
    hess_ = hess;
    features_ = &features;

    GbdtTree tree;
    tree.nodes.emplace_back();
    leaves_.clear();
    LeafState root;
    root.node_id = 0;
    root.begin = 0;
    root.end = rows_.size();
    root.hist.assign(static_cast<std::size_t>(total_bins_), HistEntry{});
    build_hist(root.begin, root.end, root.hist);
    for (const auto r : rows_) {
      root.sum_g += grad_[r];
      root.sum_h += hess_[r];
    }
    find_best(root);
    leaves_.push_back(std::move(root));

    int leaf_count = 1;
    while (leaf_count < cfg_.num_leaves) {
      // Highest positive gain wins; earlier-created leaves win exact ties.
      int pick = -1;
      for (std::size_t i = 0; i < leaves_.size(); ++i)
        if (leaves_[i].open && leaves_[i].best.feature >= 0 &&
            (pick < 0 || leaves_[i].best.gain > leaves_[static_cast<std::size_t>(pick)].best.gain))
          pick = static_cast<int>(i);
      if (pick < 0) break;
      split_leaf(tree, static_cast<std::size_t>(pick));
      ++leaf_count;
    }

    for (const auto& leaf : leaves_) {
      if (!leaf.open) continue;
      tree.nodes[static_cast<std::size_t>(leaf.node_id)].leaf_value =
          -leaf.sum_g / (leaf.sum_h + cfg_.lambda_l2);
    }
    return tree;
  }

 private:
  // Parallel over features: each feature owns a disjoint bin range and its
  // rows are scanned in the same order regardless of worker count, so the
  // sums are bit-identical for any thread setting.
  void build_hist(std::size_t begin, std::size_t end, std::vector<HistEntry>& hist) {
    const auto& features = *features_;
    parallel_for(0, features.size(), threads_, [&](std::size_t flo, std::size_t fhi) {
      for (std::size_t fi = flo; fi < fhi; ++fi) {
        const int f = features[fi];
        HistEntry* base = hist.data() + bin_offsets_[static_cast<std::size_t>(f)];
        const std::uint8_t* col = data_.by_feature.data() + static_cast<std::size_t>(f) * data_.rows;
        for (std::size_t i = begin; i < end; ++i) {
          const std::uint32_t r = rows_[i];
          HistEntry& e = base[col[r]];
          e.g += grad_[r];
          e.h += hess_[r];
          ++e.count;
        }
      }
    });
  }

  void find_best(LeafState& leaf) {
    leaf.best = SplitInfo{};
    const int total = static_cast<int>(leaf.end - leaf.begin);
    const double lam = cfg_.lambda_l2;
    const double parent_term = leaf.sum_g * leaf.sum_g / (leaf.sum_h + lam);
    for (int f : *features_) {
      const int nbins = bin_offsets_[static_cast<std::size_t>(f) + 1] - bin_offsets_[static_cast<std::size_t>(f)];
      const HistEntry* base = leaf.hist.data() + bin_offsets_[static_cast<std::size_t>(f)];
      double gl = 0.0, hl = 0.0;
      int cl = 0;
      for (int b = 0; b + 1 < nbins; ++b) {
        gl += base[b].g;
        hl += base[b].h;
        cl += base[b].count;
        const int cr = total - cl;
        if (cl < cfg_.min_data_in_leaf || cr < cfg_.min_data_in_leaf) continue;
        const double gr = leaf.sum_g - gl;
        const double hr = leaf.sum_h - hl;
        const double gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_term);
        if (gain > leaf.best.gain) leaf.best = {gain, f, b, gl, hl, cl};
      }
    }
    if (leaf.best.gain <= 0.0) leaf.best.feature = -1;
  }

  void split_leaf(GbdtTree& tree, std::size_t idx) {
    const SplitInfo best = leaves_[idx].best;
    const int node_id = leaves_[idx].node_id;
    const std::size_t begin = leaves_[idx].begin;
    const std::size_t end = leaves_[idx].end;

    // Stable two-pass partition keeps ascending row order in both children.
    const std::uint8_t* col = data_.by_feature.data() + static_cast<std::size_t>(best.feature) * data_.rows;
    std::size_t out = begin;
    std::size_t spill = 0;
    for (std::size_t i = begin; i < end; ++i) {
      if (col[rows_[i]] <= best.threshold)
        rows_[out++] = rows_[i];
      else
        scratch_[spill++] = rows_[i];
    }
    const std::size_t mid = out;
    for (std::size_t i = 0; i < spill; ++i) rows_[mid + i] = scratch_[i];

    const int left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& parent = tree.nodes[static_cast<std::size_t>(node_id)];
    parent.feature = best.feature;
    parent.threshold = best.threshold;
    parent.left = left_id;
    parent.right = left_id + 1;

    LeafState left, right;
    left.node_id = left_id;
    left.begin = begin;
    left.end = mid;
    left.sum_g = best.left_g;
    left.sum_h = best.left_h;
    right.node_id = left_id + 1;
    right.begin = mid;
    right.end = end;
    right.sum_g = leaves_[idx].sum_g - best.left_g;
    right.sum_h = leaves_[idx].sum_h - best.left_h;

    // Scan the smaller child; the sibling histogram is parent minus child.
    LeafState& small = (mid - begin <= end - mid) ? left : right;
    LeafState& large = (&small == &left) ? right : left;
    small.hist.assign(static_cast<std::size_t>(total_bins_), HistEntry{});
    build_hist(small.begin, small.end, small.hist);
    large.hist = std::move(leaves_[idx].hist);
    for (int b = 0; b < total_bins_; ++b) {
      large.hist[static_cast<std::size_t>(b)].g -= small.hist[static_cast<std::size_t>(b)].g;
      large.hist[static_cast<std::size_t>(b)].h -= small.hist[static_cast<std::size_t>(b)].h;
      large.hist[static_cast<std::size_t>(b)].count -= small.hist[static_cast<std::size_t>(b)].count;
    }
    find_best(left);
    find_best(right);

    leaves_[idx].open = false;
    leaves_[idx].hist.clear();
    leaves_.push_back(std::move(left));
    leaves_.push_back(std::move(right));
  }

  const Binned& data_;
  const std::vector<int>& bin_offsets_;
  int total_bins_;
  GbdtConfig cfg_;
  int threads_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::uint32_t> scratch_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  const std::vector<int>* features_ = nullptr;
  std::vector<LeafState> leaves_;
};

}  // namespace

GbdtModel gbdt_fit(const LabeledDataset& train, const LabeledDataset* valid,
                   const GbdtConfig& config, GbdtHistory* history, int threads) {
  if (train.a != Encoding::v1) throw std::invalid_argument("gbdt_fit: requires a v1 dataset");
  if (train.rows() == 0) throw std::invalid_argument("gbdt_fit: empty training set");
  if (config.num_leaves < 2) throw std::invalid_argument("gbdt_fit: num_leaves must be >= 2");
  if (config.feature_fraction <= 0.0 || config.feature_fraction > 1.0 ||
      config.bagging_fraction <= 0.0 || config.bagging_fraction > 1.0)
    throw std::invalid_argument("gbdt_fit: fractions must lie in (0, 1]");

  GbdtModel model;
  model.config = config;
  model.n_features = static_cast<int>(train.row_len);
  model.bin_edges.reserve(train.row_len);
  for (int f = 0; f < model.n_features; ++f)
    model.bin_edges.push_back(make_bin_edges(train, f, config.max_bin));

  const Binned binned = bin_dataset(train, model.bin_edges);
  Binned binned_valid;
  bool use_valid_metric = false;
  if (valid && valid->rows() > 0) {
    if (valid->row_len != train.row_len) throw std::invalid_argument("gbdt_fit: width mismatch");
    binned_valid = bin_dataset(*valid, model.bin_edges);
    const std::size_t pos = valid->count_label(1);
    use_valid_metric = pos > 0 && pos < valid->rows();
  }

  std::vector<int> bin_offsets(train.row_len + 1, 0);
  for (std::size_t f = 0; f < train.row_len; ++f)
    bin_offsets[f + 1] = bin_offsets[f] + static_cast<int>(model.bin_edges[f].size());
  const int total_bins = bin_offsets[train.row_len];

  const std::size_t rows = train.rows();
  const double pos_count = static_cast<double>(train.count_label(1));
  double prior = pos_count / static_cast<double>(rows);
  prior = std::min(1.0 - 1e-7, std::max(1e-7, prior));
  model.base_score = std::log(prior / (1.0 - prior));

  std::vector<double> score(rows, model.base_score);
  std::vector<double> valid_score(valid ? valid->rows() : 0, model.base_score);
  std::vector<double> grad(rows), hess(rows);

  Rng bag_rng(derive_seed(config.seed, "gbdt.bagging"));
  Rng feat_rng(derive_seed(config.seed, "gbdt.features"));
  const bool bagging = config.bagging_fraction < 1.0 && config.bagging_freq > 0;
  std::vector<std::uint32_t> all_rows(rows);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::vector<std::uint32_t> bag = all_rows;

  TreeGrower grower(binned, bin_offsets, total_bins, config, threads);
  double best_auc = -1.0;
  int best_iter = -1;

  for (int iter = 0; iter < config.num_iterations; ++iter) {
    std::atomic<bool> finite{true};
    parallel_for(0, rows, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t r = lo; r < hi; ++r) {
        const double p = sigmoid(score[r]);
        grad[r] = p - static_cast<double>(train.labels[r]);
        hess[r] = p * (1.0 - p);
        if (!std::isfinite(grad[r]) || !std::isfinite(hess[r])) finite = false;
      }
    });
    if (!finite) throw std::runtime_error("gbdt_fit: non-finite gradient");

    if (bagging && iter % config.bagging_freq == 0) {
      std::vector<std::uint32_t> pool = all_rows;
      bag_rng.shuffle(pool);
      const auto take = static_cast<std::size_t>(config.bagging_fraction * static_cast<double>(rows));
      bag.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, take)));
      std::sort(bag.begin(), bag.end());
    }

    std::vector<int> features(train.row_len);
    std::iota(features.begin(), features.end(), 0);
    if (config.feature_fraction < 1.0) {
      feat_rng.shuffle(features);
      const auto keep = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(config.feature_fraction * static_cast<double>(train.row_len))));
      features.resize(keep);
      std::sort(features.begin(), features.end());
    }

    model.trees.push_back(grower.grow(bag, grad, hess, features));
    const GbdtTree& tree = model.trees.back();

    parallel_for(0, rows, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t r = lo; r < hi; ++r) {
        const int leaf = traverse(tree, binned.by_row.data() + r * static_cast<std::size_t>(binned.features));
        score[r] += config.learning_rate * tree.nodes[static_cast<std::size_t>(leaf)].leaf_value;
      }
    });
    parallel_for(0, valid_score.size(), threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t r = lo; r < hi; ++r) {
        const int leaf = traverse(tree, binned_valid.by_row.data() + r * static_cast<std::size_t>(binned_valid.features));
        valid_score[r] += config.learning_rate * tree.nodes[static_cast<std::size_t>(leaf)].leaf_value;
      }
    });

    if (history) {
      double loss = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double p = sigmoid(score[r]);
        loss -= train.labels[r] ? std::log(std::max(p, 1e-300)) : std::log(std::max(1.0 - p, 1e-300));
      }
      history->train_logloss.push_back(loss / static_cast<double>(rows));
    }

    if (use_valid_metric) {
      const double a = auc(valid_score, valid->labels);
      if (history) history->val_auc.push_back(a);
      if (a > best_auc) {
        best_auc = a;
        best_iter = iter;
      } else if (config.early_stopping_rounds > 0 && iter - best_iter >= config.early_stopping_rounds) {
        model.best_iteration = best_iter + 1;
        break;
      }
    }
  }
  if (use_valid_metric && model.best_iteration < 0 && best_iter >= 0)
    model.best_iteration = best_iter + 1;
  return model;
}

double gbdt_predict_proba(const GbdtModel& model, std::span<const std::uint8_t> x) {
  if (x.size() != static_cast<std::size_t>(model.n_features))
    throw std::invalid_argument("gbdt_predict_proba: width mismatch");
  std::vector<std::uint8_t> bins(x.size());
  for (std::size_t f = 0; f < x.size(); ++f)
    bins[f] = static_cast<std::uint8_t>(bin_of(model.bin_edges[f], x[f]));
  double total = model.base_score;
  const int used = model.used_trees();
  for (int t = 0; t < used; ++t) {
    const GbdtTree& tree = model.trees[static_cast<std::size_t>(t)];
    total += model.config.learning_rate *
             tree.nodes[static_cast<std::size_t>(traverse(tree, bins.data()))].leaf_value;
  }
  return sigmoid(total);
}

std::vector<double> gbdt_scores(const GbdtModel& model, const LabeledDataset& data, int threads) {
  std::vector<double> out(data.rows());
  parallel_for(0, data.rows(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) out[r] = gbdt_predict_proba(model, data.row(r));
  });
  return out;
}

std::vector<std::uint8_t> gbdt_predict_batch(const GbdtModel& model, const LabeledDataset& data,
                                             int threads) {
  std::vector<std::uint8_t> out(data.rows());
  parallel_for(0, data.rows(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r)
      out[r] = gbdt_predict_proba(model, data.row(r)) > 0.5 ? 1 : 0;
  });
  return out;
}

void save_gbdt(const GbdtModel& model, const std::filesystem::path& file) {
  std::ostringstream out;
  const GbdtConfig& c = model.config;
  char buf[40];
  auto put_double = [&](double v) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, end - buf);
  };
  out << "base_score=";
  put_double(model.base_score);
  out << ",n_features=" << model.n_features << ",best_iteration=" << model.best_iteration
      << ",num_leaves=" << c.num_leaves << ",feature_fraction=" << c.feature_fraction
      << ",bagging_fraction=" << c.bagging_fraction << ",bagging_freq=" << c.bagging_freq
      << ",learning_rate=" << c.learning_rate << ",num_iterations=" << c.num_iterations
      << ",early_stopping_rounds=" << c.early_stopping_rounds << ",max_bin=" << c.max_bin
      << ",min_data_in_leaf=" << c.min_data_in_leaf << ",lambda_l2=" << c.lambda_l2
      << ",seed=" << c.seed << '\n';
  for (const auto& edges : model.bin_edges) {
    for (std::size_t i = 0; i < edges.size(); ++i) out << (i ? "," : "") << static_cast<int>(edges[i]);
    out << '\n';
  }
  out << "trees=" << model.trees.size() << '\n';
  for (const auto& tree : model.trees) {
    out << "nodes=" << tree.nodes.size() << '\n';
    for (const auto& nd : tree.nodes) {
      out << nd.feature << ' ' << nd.threshold << ' ' << nd.left << ' ' << nd.right << ' ';
      put_double(nd.leaf_value);
      out << '\n';
    }
  }
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + file.string());
    f << out.str();
  }
  std::filesystem::rename(tmp, file);
}

GbdtModel load_gbdt(const std::filesystem::path& file) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + file.string());
  GbdtModel m;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty gbdt file " + file.string());
  GbdtConfig& c = m.config;
  unsigned long long seed = 0;
  if (std::sscanf(line.c_str(),
                  "base_score=%lf,n_features=%d,best_iteration=%d,num_leaves=%d,"
                  "feature_fraction=%lf,bagging_fraction=%lf,bagging_freq=%d,learning_rate=%lf,"
                  "num_iterations=%d,early_stopping_rounds=%d,max_bin=%d,min_data_in_leaf=%d,"
                  "lambda_l2=%lf,seed=%llu",
                  &m.base_score, &m.n_features, &m.best_iteration, &c.num_leaves,
                  &c.feature_fraction, &c.bagging_fraction, &c.bagging_freq, &c.learning_rate,
                  &c.num_iterations, &c.early_stopping_rounds, &c.max_bin, &c.min_data_in_leaf,
                  &c.lambda_l2, &seed) != 14)
    throw std::runtime_error("bad gbdt header in " + file.string());
  c.seed = seed;
  m.bin_edges.resize(static_cast<std::size_t>(m.n_features));
  for (auto& edges : m.bin_edges) {
    if (!std::getline(f, line)) throw std::runtime_error("truncated gbdt file " + file.string());
    std::istringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) edges.push_back(static_cast<std::uint8_t>(std::stoi(tok)));
  }
  if (!std::getline(f, line) || line.rfind("trees=", 0) != 0)
    throw std::runtime_error("bad gbdt tree count in " + file.string());
  const auto ntrees = static_cast<std::size_t>(std::stoull(line.substr(6)));
  m.trees.resize(ntrees);
  for (auto& tree : m.trees) {
    if (!std::getline(f, line) || line.rfind("nodes=", 0) != 0)
      throw std::runtime_error("bad gbdt node count in " + file.string());
    const auto nn = static_cast<std::size_t>(std::stoull(line.substr(6)));
    tree.nodes.resize(nn);
    for (auto& nd : tree.nodes) {
      if (!std::getline(f, line)) throw std::runtime_error("truncated gbdt file " + file.string());
      std::istringstream ss(line);
      if (!(ss >> nd.feature >> nd.threshold >> nd.left >> nd.right >> nd.leaf_value))
        throw std::runtime_error("bad gbdt node in " + file.string());
    }
  }
  return m;
}

}  // namespace kronml
