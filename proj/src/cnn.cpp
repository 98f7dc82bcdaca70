#include "kronml/cnn.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "kronml/parallel.hpp"
#include "kronml/rng.hpp"

namespace kronml {

std::string cnn_variant_name(CnnVariant v) { return v == CnnVariant::cnn2 ? "cnn2" : "cnn3"; }

CnnVariant cnn_variant_from_name(const std::string& s) {
  if (s == "cnn2") return CnnVariant::cnn2;
  if (s == "cnn3") return CnnVariant::cnn3;
  throw std::invalid_argument("unknown cnn variant: " + s);
}

CnnShape CnnShape::make(CnnVariant v, int n) {
  if (n < 6) throw std::invalid_argument("cnn: n must be at least 6 so the kernel fits");
  CnnShape s;
  s.n = n;
  if (v == CnnVariant::cnn2) {
    s.in_h = n;
    s.in_w = 3;
    s.in_c = 1;
    s.kh = n - 4;
    s.kw = 3;
  } else {
    s.in_h = 6;
    s.in_w = n;
    s.in_c = 3;
    s.kh = 2;
    s.kw = n - 4;
  }
  s.out_h = s.in_h - s.kh + 1;
  s.out_w = s.in_w - s.kw + 1;
  s.flat = s.out_h * s.out_w * s.filters;
  return s;
}

namespace {

double dot(const double* a, const double* b, int len) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int i = 0;
  for (; i + 4 <= len; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < len; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void axpy(double* y, double s, const double* x, int len) {
  for (int i = 0; i < len; ++i) y[i] += s * x[i];
}

struct Scratch {
  std::vector<double> input;  // converted sample
  std::vector<double> act;    // post-ReLU conv output, (oh*OW+ow)*F + f
  std::vector<double> dact;

  explicit Scratch(const CnnShape& s)
      : input(s.input_len()), act(static_cast<std::size_t>(s.flat)), dact(static_cast<std::size_t>(s.flat)) {}
};

void load_input(const CnnShape& s, std::span<const std::uint8_t> x, std::vector<double>& input) {
  if (x.size() != s.input_len()) throw std::invalid_argument("cnn: input length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) input[i] = static_cast<double>(x[i]);
}

// Valid convolution, stride 1, then ReLU into scratch.act; returns softmax
// probabilities. The input layout (h, w, c) with c fastest matches the v2
// and v3 flattening exactly, so rows feed in without rearrangement.
std::array<double, 2> forward_into(const CnnModel& m, Scratch& sc) {
  const CnnShape& s = m.shape;
  const int row_len = s.kw * s.in_c;        // contiguous kernel row
  const int in_stride = s.in_w * s.in_c;    // input row stride
  const double* cw = m.conv_w();
  const double* cb = m.conv_b();
  for (int oh = 0; oh < s.out_h; ++oh) {
    for (int ow = 0; ow < s.out_w; ++ow) {
      double* out = sc.act.data() + (static_cast<std::size_t>(oh) * s.out_w + ow) * s.filters;
      const double* in_base = sc.input.data() + static_cast<std::size_t>(oh) * in_stride + static_cast<std::size_t>(ow) * s.in_c;
      for (int f = 0; f < s.filters; ++f) {
        const double* k = cw + static_cast<std::size_t>(f) * s.kh * row_len;
        double acc = cb[f];
        for (int kh = 0; kh < s.kh; ++kh)
          acc += dot(k + static_cast<std::size_t>(kh) * row_len, in_base + static_cast<std::size_t>(kh) * in_stride, row_len);
        out[f] = acc > 0.0 ? acc : 0.0;
      }
    }
  }
  const double* dw = m.dense_w();
  const double* db = m.dense_b();
  double logit0 = db[0] + dot(dw, sc.act.data(), s.flat);
  double logit1 = db[1] + dot(dw + s.flat, sc.act.data(), s.flat);
  const double mx = logit0 > logit1 ? logit0 : logit1;
  const double e0 = std::exp(logit0 - mx);
  const double e1 = std::exp(logit1 - mx);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

// Accumulates parameter gradients for one sample given the forward pass
// already stored in scratch. grad layout mirrors the params vector.
void backward_into(const CnnModel& m, Scratch& sc, const std::array<double, 2>& probs, int y,
                   double* grad) {
  const CnnShape& s = m.shape;
  const double dlogit[2] = {probs[0] - (y == 0 ? 1.0 : 0.0), probs[1] - (y == 1 ? 1.0 : 0.0)};

  double* g_conv_w = grad;
  double* g_conv_b = grad + s.conv_w_count();
  double* g_dense_w = g_conv_b + s.filters;
  double* g_dense_b = g_dense_w + s.dense_w_count();

  g_dense_b[0] += dlogit[0];
  g_dense_b[1] += dlogit[1];
  axpy(g_dense_w, dlogit[0], sc.act.data(), s.flat);
  axpy(g_dense_w + s.flat, dlogit[1], sc.act.data(), s.flat);

  const double* dw = m.dense_w();
  for (int i = 0; i < s.flat; ++i) {
    const double d = dw[i] * dlogit[0] + dw[s.flat + i] * dlogit[1];
    sc.dact[static_cast<std::size_t>(i)] = sc.act[static_cast<std::size_t>(i)] > 0.0 ? d : 0.0;
  }

  const int row_len = s.kw * s.in_c;
  const int in_stride = s.in_w * s.in_c;
  for (int oh = 0; oh < s.out_h; ++oh) {
    for (int ow = 0; ow < s.out_w; ++ow) {
      const double* d_out = sc.dact.data() + (static_cast<std::size_t>(oh) * s.out_w + ow) * s.filters;
      const double* in_base = sc.input.data() + static_cast<std::size_t>(oh) * in_stride + static_cast<std::size_t>(ow) * s.in_c;
      for (int f = 0; f < s.filters; ++f) {
        const double g = d_out[f];
        if (g == 0.0) continue;
        g_conv_b[f] += g;
        double* gk = g_conv_w + static_cast<std::size_t>(f) * s.kh * row_len;
        for (int kh = 0; kh < s.kh; ++kh)
          axpy(gk + static_cast<std::size_t>(kh) * row_len, g, in_base + static_cast<std::size_t>(kh) * in_stride, row_len);
      }
    }
  }
}

}  // namespace

CnnModel cnn_build(CnnVariant v, int n, std::uint64_t seed) {
  CnnModel m;
  m.variant = v;
  m.shape = CnnShape::make(v, n);
  m.seed = seed;
  m.params.assign(m.shape.param_count(), 0.0);

  const std::size_t expect = v == CnnVariant::cnn2 ? 96 * static_cast<std::size_t>(n) - 30
                                                   : 192 * static_cast<std::size_t>(n) + 866;
  if (m.shape.param_count() != expect)
    throw std::logic_error("cnn parameter count does not match the closed form");

  Rng rng(seed);
  const CnnShape& s = m.shape;
  const double conv_limit =
      std::sqrt(6.0 / (static_cast<double>(s.kh * s.kw * s.in_c) + static_cast<double>(s.kh * s.kw) * s.filters));
  double* cw = m.conv_w();
  for (std::size_t i = 0; i < s.conv_w_count(); ++i) cw[i] = rng.uniform(-conv_limit, conv_limit);
  const double dense_limit = std::sqrt(6.0 / (static_cast<double>(s.flat) + s.classes));
  double* dw = m.dense_w();
  for (std::size_t i = 0; i < s.dense_w_count(); ++i) dw[i] = rng.uniform(-dense_limit, dense_limit);
  return m;
}

std::array<double, 2> cnn_forward(const CnnModel& model, std::span<const std::uint8_t> x) {
  Scratch sc(model.shape);
  load_input(model.shape, x, sc.input);
  return forward_into(model, sc);
}

double cnn_loss_and_grad(const CnnModel& model, const LabeledDataset& data,
                         std::span<const std::size_t> rows, std::vector<double>& grad) {
  grad.assign(model.params.size(), 0.0);
  Scratch sc(model.shape);
  double loss = 0.0;
  for (std::size_t r : rows) {
    load_input(model.shape, data.row(r), sc.input);
    const auto probs = forward_into(model, sc);
    const int y = data.label(r);
    loss += -std::log(probs[static_cast<std::size_t>(y)]);
    backward_into(model, sc, probs, y, grad.data());
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  loss *= inv;
  for (double& g : grad) g *= inv;
  return loss;
}

CnnTrainLog cnn_train(CnnModel& model, const LabeledDataset& train, const LabeledDataset* valid,
                      const CnnConfig& config) {
  const Encoding want = model.variant == CnnVariant::cnn2 ? Encoding::v2 : Encoding::v3;
  if (train.a != want)
    throw std::invalid_argument("cnn_train: dataset encoding does not match the variant");
  if (valid && valid->a != want)
    throw std::invalid_argument("cnn_train: validation encoding does not match the variant");
  if (train.rows() == 0) throw std::invalid_argument("cnn_train: empty training set");

  model.config = config;
  const std::size_t pcount = model.params.size();
  std::vector<double> grad(pcount), adam_m(pcount, 0.0), adam_v(pcount, 0.0);
  double b1t = 1.0, b2t = 1.0;

  std::vector<std::size_t> index(train.rows());
  std::iota(index.begin(), index.end(), 0);
  Rng shuffle_rng(derive_seed(config.seed, "cnn.shuffle"));

  CnnTrainLog log;
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(index);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < index.size(); start += batch) {
      const std::size_t stop = std::min(index.size(), start + batch);
      const std::span<const std::size_t> rows{index.data() + start, stop - start};
      const double loss = cnn_loss_and_grad(model, train, rows, grad);
      if (!std::isfinite(loss)) {
        char msg[128];
        std::snprintf(msg, sizeof(msg), "cnn_train: non-finite loss %.17g at epoch %d sample %zu",
                      loss, epoch, start);
        throw std::runtime_error(msg);
      }
      epoch_loss += loss * static_cast<double>(rows.size());
      seen += rows.size();

      b1t *= config.beta1;
      b2t *= config.beta2;
      const double corr = config.learning_rate * std::sqrt(1.0 - b2t) / (1.0 - b1t);
      for (std::size_t i = 0; i < pcount; ++i) {
        adam_m[i] = config.beta1 * adam_m[i] + (1.0 - config.beta1) * grad[i];
        adam_v[i] = config.beta2 * adam_v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
        model.params[i] -= corr * adam_m[i] / (std::sqrt(adam_v[i]) + config.eps);
      }
    }
    log.train_loss.push_back(epoch_loss / static_cast<double>(seen));
    if (valid) {
      const auto preds = cnn_predict_batch(model, *valid, config.eval_threads);
      std::size_t hits = 0;
      for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == valid->labels[i];
      log.val_accuracy.push_back(static_cast<double>(hits) / static_cast<double>(preds.size()));
    }
  }
  return log;
}

std::vector<std::uint8_t> cnn_predict_batch(const CnnModel& model, const LabeledDataset& data,
                                            int threads) {
  std::vector<std::uint8_t> out(data.rows());
  parallel_for(0, data.rows(), threads, [&](std::size_t lo, std::size_t hi) {
    Scratch sc(model.shape);
    for (std::size_t r = lo; r < hi; ++r) {
      load_input(model.shape, data.row(r), sc.input);
      const auto probs = forward_into(model, sc);
      out[r] = probs[1] > probs[0] ? 1 : 0;
    }
  });
  return out;
}

std::vector<double> cnn_scores(const CnnModel& model, const LabeledDataset& data, int threads) {
  std::vector<double> out(data.rows());
  parallel_for(0, data.rows(), threads, [&](std::size_t lo, std::size_t hi) {
    Scratch sc(model.shape);
    for (std::size_t r = lo; r < hi; ++r) {
      load_input(model.shape, data.row(r), sc.input);
      out[r] = forward_into(model, sc)[1];
    }
  });
  return out;
}

void save_cnn(const CnnModel& model, const std::filesystem::path& file) {
  std::ostringstream out;
  out << "variant=" << cnn_variant_name(model.variant) << ",n=" << model.shape.n
      << ",seed=" << model.seed << ",learning_rate=" << model.config.learning_rate
      << ",beta1=" << model.config.beta1 << ",beta2=" << model.config.beta2
      << ",eps=" << model.config.eps << ",batch_size=" << model.config.batch_size
      << ",epochs=" << model.config.epochs << '\n';
  char buf[40];
  for (double p : model.params) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), p);
    out.write(buf, end - buf);
    out.put('\n');
  }
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + file.string());
    f << out.str();
  }
  std::filesystem::rename(tmp, file);
}

CnnModel load_cnn(const std::filesystem::path& file) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + file.string());
  std::string header;
  if (!std::getline(f, header)) throw std::runtime_error("empty cnn file " + file.string());
  char variant[16] = {0};
  int n = 0, batch_size = 0, epochs = 0;
  unsigned long long seed = 0;
  double lr = 0, b1 = 0, b2 = 0, eps = 0;
  if (std::sscanf(header.c_str(),
                  "variant=%15[^,],n=%d,seed=%llu,learning_rate=%lf,beta1=%lf,beta2=%lf,eps=%lf,"
                  "batch_size=%d,epochs=%d",
                  variant, &n, &seed, &lr, &b1, &b2, &eps, &batch_size, &epochs) != 9)
    throw std::runtime_error("bad cnn header in " + file.string());

  CnnModel m;
  m.variant = cnn_variant_from_name(variant);
  m.shape = CnnShape::make(m.variant, n);
  m.seed = seed;
  m.config = {lr, b1, b2, eps, batch_size, epochs, seed, 1};
  m.params.reserve(m.shape.param_count());
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    double v = 0;
    auto [p, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc()) throw std::runtime_error("bad parameter in " + file.string());
    (void)p;
    m.params.push_back(v);
  }
  if (m.params.size() != m.shape.param_count())
    throw std::runtime_error("cnn parameter count mismatch in " + file.string());
  return m;
}

}  // namespace kronml
