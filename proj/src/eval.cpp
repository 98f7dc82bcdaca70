#include "kronml/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "kronml/knn.hpp"
#include "kronml/rng.hpp"

namespace kronml {

using nlohmann::json;

std::string classifier_name(ClassifierKind c) {
  switch (c) {
    case ClassifierKind::nearn: return "nearn";
    case ClassifierKind::cnn2: return "cnn2";
    case ClassifierKind::cnn3: return "cnn3";
    case ClassifierKind::lgbm: return "lgbm";
  }
  throw std::invalid_argument("bad classifier kind");
}

ClassifierKind classifier_from_name(const std::string& s) {
  if (s == "nearn") return ClassifierKind::nearn;
  if (s == "cnn2") return ClassifierKind::cnn2;
  if (s == "cnn3") return ClassifierKind::cnn3;
  if (s == "lgbm") return ClassifierKind::lgbm;
  throw std::invalid_argument("unknown classifier: " + s);
}

Encoding classifier_encoding(ClassifierKind c) {
  switch (c) {
    case ClassifierKind::nearn:
    case ClassifierKind::lgbm: return Encoding::v1;
    case ClassifierKind::cnn2: return Encoding::v2;
    case ClassifierKind::cnn3: return Encoding::v3;
  }
  throw std::invalid_argument("bad classifier kind");
}

void fill_metrics(EvalReport& r) {
  r.accuracy = accuracy(r.confusion);
  r.precision0 = precision_of(r.confusion, 0);
  r.precision1 = precision_of(r.confusion, 1);
  r.recall0 = recall_of(r.confusion, 0);
  r.recall1 = recall_of(r.confusion, 1);
}

json report_to_json(const EvalReport& r) {
  json j;
  j["n"] = r.n;
  j["classifier"] = r.classifier;
  j["encoding"] = r.encoding;
  j["sizes"] = {{"train0", r.train0}, {"train1", r.train1}, {"valid0", r.valid0}, {"valid1", r.valid1}};
  j["accuracy"] = r.accuracy;
  j["precision0"] = r.precision0;
  j["precision1"] = r.precision1;
  j["recall0"] = r.recall0;
  j["recall1"] = r.recall1;
  if (r.auc_value) j["auc"] = *r.auc_value;
  j["confusion"] = {{r.confusion.at(0, 0), r.confusion.at(0, 1)},
                    {r.confusion.at(1, 0), r.confusion.at(1, 1)}};
  j["config"] = r.config;
  j["seeds"] = r.seeds;
  return j;
}

json report_timings_json(const EvalReport& r) {
  return json{{"timings_ms",
               {{"generate", r.generate_ms}, {"train", r.train_ms}, {"evaluate", r.evaluate_ms}}}};
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.n = j.at("n").get<int>();
  r.classifier = j.at("classifier").get<std::string>();
  r.encoding = j.at("encoding").get<int>();
  const auto& s = j.at("sizes");
  r.train0 = s.at("train0").get<std::size_t>();
  r.train1 = s.at("train1").get<std::size_t>();
  r.valid0 = s.at("valid0").get<std::size_t>();
  r.valid1 = s.at("valid1").get<std::size_t>();
  r.accuracy = j.at("accuracy").get<double>();
  r.precision0 = j.at("precision0").get<double>();
  r.precision1 = j.at("precision1").get<double>();
  r.recall0 = j.at("recall0").get<double>();
  r.recall1 = j.at("recall1").get<double>();
  if (j.contains("auc")) r.auc_value = j.at("auc").get<double>();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) r.confusion.at(a, b) = j.at("confusion").at(a).at(b).get<std::int64_t>();
  r.config = j.value("config", json::object());
  r.seeds = j.value("seeds", json::object());
  return r;
}

std::string report_text(const EvalReport& r) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "n=%d classifier=%s encoding=%d\n", r.n, r.classifier.c_str(),
                r.encoding);
  out << line;
  std::snprintf(line, sizeof(line), "sizes: train0=%zu train1=%zu valid0=%zu valid1=%zu\n",
                r.train0, r.train1, r.valid0, r.valid1);
  out << line;
  if (r.auc_value)
    std::snprintf(line, sizeof(line), "accuracy=%.4f auc=%.4f\n", r.accuracy, *r.auc_value);
  else
    std::snprintf(line, sizeof(line), "accuracy=%.4f\n", r.accuracy);
  out << line;
  std::snprintf(line, sizeof(line), "class0: precision=%.4f recall=%.4f\n", r.precision0, r.recall0);
  out << line;
  std::snprintf(line, sizeof(line), "class1: precision=%.4f recall=%.4f\n", r.precision1, r.recall1);
  out << line;
  out << "confusion (rows = true class):\n";
  std::snprintf(line, sizeof(line), "%10s %10s %10s\n", "", "pred0", "pred1");
  out << line;
  for (int a = 0; a < 2; ++a) {
    std::snprintf(line, sizeof(line), "%10s %10lld %10lld\n", a == 0 ? "true0" : "true1",
                  static_cast<long long>(r.confusion.at(a, 0)),
                  static_cast<long long>(r.confusion.at(a, 1)));
    out << line;
  }
  return out.str();
}

std::string confusion_svg(const Confusion& c, const std::string& title) {
  const int cell = 110, pad = 70;
  const int width = pad + 2 * cell + 20, height = pad + 2 * cell + 40;
  std::int64_t max_count = 1;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) max_count = std::max(max_count, c.at(a, b));

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n";
  out << "<text x=\"" << (pad + cell) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << title << "</text>\n";
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double frac = static_cast<double>(c.at(a, b)) / static_cast<double>(max_count);
      const int shade = 255 - static_cast<int>(std::lround(200.0 * frac));
      const int x = pad + b * cell, y = pad + a * cell;
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"rgb(" << shade << "," << shade << ",255)\" stroke=\"black\"/>\n";
      out << "<text x=\"" << (x + cell / 2) << "\" y=\"" << (y + cell / 2 + 5)
          << "\" text-anchor=\"middle\" font-size=\"15\">" << c.at(a, b) << "</text>\n";
    }
  }
  for (int i = 0; i < 2; ++i) {
    out << "<text x=\"" << (pad + i * cell + cell / 2) << "\" y=\"" << (pad - 12)
        << "\" text-anchor=\"middle\" font-size=\"13\">pred " << i << "</text>\n";
    out << "<text x=\"" << (pad - 12) << "\" y=\"" << (pad + i * cell + cell / 2 + 4)
        << "\" text-anchor=\"end\" font-size=\"13\">true " << i << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

namespace {

void write_text_file(const std::filesystem::path& file, const std::string& body) {
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + file.string());
    f << body;
  }
  std::filesystem::rename(tmp, file);
}

}  // namespace

void write_report_files(const EvalReport& r, const std::filesystem::path& dir,
                        const std::string& stem) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / (stem + ".json"), report_to_json(r).dump(2) + "\n");
  write_text_file(dir / (stem + ".txt"), report_text(r));
  write_text_file(dir / (stem + ".svg"),
                  confusion_svg(r.confusion, r.classifier + " n=" + std::to_string(r.n)));
  write_text_file(dir / (stem + ".timings.json"), report_timings_json(r).dump(2) + "\n");
}

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

struct RunResult {
  std::vector<std::uint8_t> preds;
  std::vector<double> scores;  // may be empty
  json model_config;
};

RunResult run_knn(const ExperimentPlan& plan, const LabeledDataset& train,
                  const LabeledDataset& valid) {
  RunResult res;
  std::vector<int> ks;
  if (plan.knn_sweep) {
    for (int k = 1; k <= 9; k += 2)
      if (static_cast<std::size_t>(k) <= train.rows()) ks.push_back(k);
  } else {
    ks.push_back(plan.knn_k);
  }
  const int kmax = ks.back();
  KnnModel model = knn_fit(train, kmax);
  const auto neighbor_labels = knn_neighbor_labels(model, valid, kmax, plan.threads);

  int best_k = ks.front();
  double best_acc = -1.0;
  json sweep = json::object();
  std::vector<std::uint8_t> best_preds;
  for (int k : ks) {
    std::vector<std::uint8_t> preds(valid.rows());
    for (std::size_t q = 0; q < valid.rows(); ++q) {
      int ones = 0;
      for (int i = 0; i < k; ++i) ones += neighbor_labels[q * static_cast<std::size_t>(kmax) + static_cast<std::size_t>(i)];
      preds[q] = ones * 2 > k ? 1 : 0;
    }
    std::size_t hits = 0;
    for (std::size_t q = 0; q < valid.rows(); ++q) hits += preds[q] == valid.labels[q];
    const double acc = static_cast<double>(hits) / static_cast<double>(valid.rows());
    sweep[std::to_string(k)] = acc;
    if (acc > best_acc) {
      best_acc = acc;
      best_k = k;
      best_preds = std::move(preds);
    }
  }

  res.preds = std::move(best_preds);
  res.scores.resize(valid.rows());
  for (std::size_t q = 0; q < valid.rows(); ++q) {
    int ones = 0;
    for (int i = 0; i < best_k; ++i) ones += neighbor_labels[q * static_cast<std::size_t>(kmax) + static_cast<std::size_t>(i)];
    res.scores[q] = static_cast<double>(ones) / static_cast<double>(best_k);
  }
  res.model_config = {{"k", best_k}, {"metric", "euclidean"}};
  if (plan.knn_sweep) res.model_config["sweep"] = sweep;
  return res;
}

RunResult run_cnn(const ExperimentPlan& plan, const LabeledDataset& train,
                  const LabeledDataset& valid, std::uint64_t model_seed, double* train_ms) {
  RunResult res;
  const CnnVariant variant =
      plan.classifier == ClassifierKind::cnn2 ? CnnVariant::cnn2 : CnnVariant::cnn3;
  CnnModel model = cnn_build(variant, plan.n, model_seed);
  CnnConfig cfg = plan.cnn;
  cfg.seed = model_seed;
  cfg.eval_threads = plan.threads;
  const auto t0 = std::chrono::steady_clock::now();
  cnn_train(model, train, nullptr, cfg);
  *train_ms = ms_since(t0);
  res.preds = cnn_predict_batch(model, valid, plan.threads);
  res.scores = cnn_scores(model, valid, plan.threads);
  res.model_config = {{"variant", cnn_variant_name(variant)},
                      {"parameters", model.shape.param_count()},
                      {"learning_rate", cfg.learning_rate},
                      {"beta1", cfg.beta1},
                      {"beta2", cfg.beta2},
                      {"eps", cfg.eps},
                      {"batch_size", cfg.batch_size},
                      {"epochs", cfg.epochs},
                      {"activation", "relu"},
                      {"normalization", "none"}};
  return res;
}

RunResult run_gbdt(const ExperimentPlan& plan, const LabeledDataset& train,
                   const LabeledDataset& valid, std::uint64_t model_seed, double* train_ms) {
  RunResult res;
  GbdtConfig cfg = plan.gbdt;
  cfg.seed = model_seed;
  const auto t0 = std::chrono::steady_clock::now();
  GbdtModel model = gbdt_fit(train, &valid, cfg, nullptr, plan.threads);
  *train_ms = ms_since(t0);
  res.preds = gbdt_predict_batch(model, valid, plan.threads);
  res.scores = gbdt_scores(model, valid, plan.threads);
  res.model_config = {{"num_leaves", cfg.num_leaves},
                      {"feature_fraction", cfg.feature_fraction},
                      {"bagging_fraction", cfg.bagging_fraction},
                      {"bagging_freq", cfg.bagging_freq},
                      {"learning_rate", cfg.learning_rate},
                      {"num_iterations", cfg.num_iterations},
                      {"early_stopping_rounds", cfg.early_stopping_rounds},
                      {"max_bin", cfg.max_bin},
                      {"min_data_in_leaf", cfg.min_data_in_leaf},
                      {"lambda_l2", cfg.lambda_l2},
                      {"trees_used", model.used_trees()},
                      {"metric", "auc"},
                      {"boosting", "gbdt"}};
  return res;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentPlan& plan, const LabeledDataset& base,
                                 double generate_ms) {
  if (plan.repetitions < 1) throw std::invalid_argument("run_experiment: repetitions must be >= 1");
  ExperimentOutcome outcome;

  for (int rep = 0; rep < plan.repetitions; ++rep) {
    const std::string rep_tag = "rep" + std::to_string(rep);
    const std::uint64_t split_seed = derive_seed(plan.seed, "split." + rep_tag);
    const std::uint64_t model_seed = derive_seed(plan.seed, "model." + rep_tag);

    SplitSpec spec{plan.train_fraction, split_seed, plan.balanced};
    SplitResult split = balance_and_split(base, spec, plan.per_class_cap);
    LabeledDataset train = plan.train_subsample < 1.0
                               ? subsample_rows(split.train, plan.train_subsample,
                                                derive_seed(plan.seed, "subsample." + rep_tag))
                               : std::move(split.train);
    const LabeledDataset& valid = split.valid;

    double train_ms = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    RunResult run;
    switch (plan.classifier) {
      case ClassifierKind::nearn:
        run = run_knn(plan, train, valid);
        train_ms = 0.0;
        break;
      case ClassifierKind::cnn2:
      case ClassifierKind::cnn3:
        run = run_cnn(plan, train, valid, model_seed, &train_ms);
        break;
      case ClassifierKind::lgbm:
        run = run_gbdt(plan, train, valid, model_seed, &train_ms);
        break;
    }
    const double total_ms = ms_since(t0);

    EvalReport r;
    r.n = plan.n;
    r.classifier = classifier_name(plan.classifier);
    r.encoding = static_cast<int>(classifier_encoding(plan.classifier));
    r.train0 = train.count_label(0);
    r.train1 = train.count_label(1);
    r.valid0 = valid.count_label(0);
    r.valid1 = valid.count_label(1);
    r.confusion = confusion_matrix(valid.labels, run.preds);
    fill_metrics(r);
    if (!run.scores.empty() && r.valid0 > 0 && r.valid1 > 0)
      r.auc_value = auc(run.scores, valid.labels);
    r.config = {{"model", run.model_config},
                {"data",
                 {{"per_class_cap", plan.per_class_cap},
                  {"train_fraction", plan.train_fraction},
                  {"balanced", plan.balanced},
                  {"train_subsample", plan.train_subsample},
                  {"features", "raw integers, no normalization"}}}};
    r.seeds = {{"master", plan.seed}, {"split", split_seed}, {"model", model_seed}};
    r.generate_ms = generate_ms;
    r.train_ms = train_ms;
    r.evaluate_ms = total_ms - train_ms;
    outcome.runs.push_back(std::move(r));
  }

  std::vector<std::size_t> idx(outcome.runs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return outcome.runs[a].accuracy < outcome.runs[b].accuracy;
  });
  outcome.median_index = idx[(idx.size() - 1) / 2];
  return outcome;
}

json outcome_summary(const ExperimentOutcome& o) {
  json runs = json::array();
  double sum = 0.0, lo = 1.0, hi = 0.0;
  for (const auto& r : o.runs) {
    runs.push_back(r.accuracy);
    sum += r.accuracy;
    lo = std::min(lo, r.accuracy);
    hi = std::max(hi, r.accuracy);
  }
  return json{{"accuracies", runs},
              {"mean", sum / static_cast<double>(o.runs.size())},
              {"min", lo},
              {"max", hi},
              {"median_index", o.median_index},
              {"median", o.median().accuracy}};
}

}  // namespace kronml
