#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kronml/characters.hpp"
#include "kronml/cnn.hpp"
#include "kronml/dataset.hpp"
#include "kronml/gbdt.hpp"
#include "kronml/metrics.hpp"

namespace kronml {

enum class ClassifierKind { nearn, cnn2, cnn3, lgbm };

std::string classifier_name(ClassifierKind c);
ClassifierKind classifier_from_name(const std::string& s);
// nearn and lgbm consume v1; cnn2 consumes v2; cnn3 consumes v3.
Encoding classifier_encoding(ClassifierKind c);

// Everything recorded about one train/evaluate run. "accuracy" is overall
// validation accuracy on the balanced set; per-class precision and recall
// are carried alongside so either reading of a single summary number is
// available.
struct EvalReport {
  int n = 0;
  std::string classifier;
  int encoding = 1;
  std::size_t train0 = 0, train1 = 0, valid0 = 0, valid1 = 0;
  double accuracy = 0.0;
  double precision0 = 0.0, precision1 = 0.0;
  double recall0 = 0.0, recall1 = 0.0;
  std::optional<double> auc_value;
  Confusion confusion;
  nlohmann::json config;
  nlohmann::json seeds;
  double generate_ms = 0.0, train_ms = 0.0, evaluate_ms = 0.0;
};

// Derives the metric fields from a confusion matrix (they are pure
// functions of it and are recomputed as a self-check elsewhere).
void fill_metrics(EvalReport& r);

// Canonical report (no wall-clock fields, so identical seeds give
// byte-identical files); timings go to a sidecar document.
nlohmann::json report_to_json(const EvalReport& r);
nlohmann::json report_timings_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

std::string report_text(const EvalReport& r);
// 2x2 heatmap with counts overlaid; cell shading proportional to count.
std::string confusion_svg(const Confusion& c, const std::string& title);

// Writes <stem>.json, <stem>.txt, <stem>.svg and <stem>.timings.json.
void write_report_files(const EvalReport& r, const std::filesystem::path& dir,
                        const std::string& stem);

struct ExperimentPlan {
  int n = 12;
  ClassifierKind classifier = ClassifierKind::lgbm;
  double train_fraction = 0.7;
  bool balanced = true;
  std::size_t per_class_cap = 0;  // 0 = unlimited
  int repetitions = 5;
  std::uint64_t seed = 0;         // master seed; per-purpose seeds derive from it
  int threads = 1;
  double train_subsample = 1.0;   // stratified row subsample of the training split

  // Model knobs (seeds inside are overridden per repetition).
  int knn_k = 5;
  bool knn_sweep = true;          // sweep k in {1,3,5,7,9}, report the best
  CnnConfig cnn;
  GbdtConfig gbdt;
};

struct ExperimentOutcome {
  std::vector<EvalReport> runs;
  std::size_t median_index = 0;  // by accuracy, lower middle

  const EvalReport& median() const { return runs[median_index]; }
};

// Steps: balance/split the base dataset, train the planned classifier,
// evaluate on the held-out split; repeated with fresh derived seeds per
// repetition. generate_ms is the caller-measured dataset build time.
ExperimentOutcome run_experiment(const ExperimentPlan& plan, const LabeledDataset& base,
                                 double generate_ms = 0.0);

// Per-run accuracies plus mean/min/max and the median index.
nlohmann::json outcome_summary(const ExperimentOutcome& o);

}  // namespace kronml
