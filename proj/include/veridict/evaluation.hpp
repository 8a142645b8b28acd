#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "veridict/classifiers.hpp"
#include "veridict/metrics.hpp"
#include "veridict/relevance.hpp"
#include "veridict/sequence.hpp"

namespace veridict {

enum class SplitKind { repeated_random, leave_one_out, cross_dataset, resubstitution };

const char* to_string(SplitKind k);
SplitKind parse_split_kind(const std::string& s);

struct SplitPlan {
  SplitKind kind = SplitKind::repeated_random;
  double train_fraction = 0.7;  // (0, 1), repeated_random only
  int n_repeats = 50;           // >= 1
  std::uint64_t seed = 0;
  bool stratified = true;
  int n_threads = 1;  // repeats run in parallel; results identical to serial
};

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::svm;
  SvmParams svm;
  RfParams rf;
  SeqTrainConfig seq;
  std::size_t seq_len = 200;
};

struct SelectionSpec {
  double fraction = 1.0;  // (0, 1]; 1 = keep all features
  ClassifierKind ranking_clf = ClassifierKind::svm;
  int importance_repeats = 10;
  double pca_threshold = 0.0;  // (0, 1] enables the PCA path instead of ranking
  int n_threads = 1;           // importance shuffles run in parallel
};

// Scaler -> (ranking selection | PCA) -> classifier, all fitted on the train
// rows only. The transform chain is replayed on held-out rows at predict time.
struct FittedPipeline {
  std::vector<std::string> all_features;  // scaler column order
  Scaler scaler;
  std::vector<std::string> selected;  // empty = all columns
  bool used_pca = false;
  PcaState pca;
  TrainedModel model;
};

FittedPipeline fit_pipeline(const FeatureMatrix& fm, std::span<const std::size_t> train_rows,
                            const ClassifierSpec& clf, const SelectionSpec& sel,
                            std::uint64_t seed);
std::vector<double> pipeline_scores(const FittedPipeline& p, const FeatureMatrix& fm,
                                    std::span<const std::size_t> rows);
double pipeline_threshold(const FittedPipeline& p);
// Standalone model with the scaler folded in; PCA pipelines are not
// representable in the model format and are rejected.
TrainedModel pipeline_to_model(const FittedPipeline& p);

struct RepeatMetrics {
  int repeat = 0;
  std::size_t n_train = 0, n_test = 0;
  double accuracy = 0.0, f1 = 0.0, mcc = 0.0;
  double auc = 0.0;  // NaN when the test split holds one class
  double ccc = 0.0;
  ConfusionMatrix cm;
};

struct Aggregate {
  double mean = 0.0, median = 0.0, stddev = 0.0;
};

struct EvalReport {
  std::string protocol;
  std::string classifier;
  std::vector<RepeatMetrics> repeats;
  Aggregate accuracy, f1, mcc, auc, ccc;
  ConfusionMatrix confusion_total;
  std::vector<RocPoint> roc;  // pooled over repeats
  double pooled_auc = 0.0;    // NaN when pooling is degenerate
  int n_redraws = 0;          // single-class train splits redrawn
};

nlohmann::ordered_json report_to_json(const EvalReport& r);
void write_roc_csv(std::span<const RocPoint> points, const std::filesystem::path& file);

// Repeated random / leave-one-out / resubstitution protocols on a feature
// matrix. Ranking, selection, and standardization are fitted inside each
// training split only.
EvalReport run_protocol(const FeatureMatrix& fm, const SplitPlan& plan, const ClassifierSpec& clf,
                        const SelectionSpec& sel);

// Dataset-level entry: dispatches to the sequence path for sequence
// classifiers, otherwise builds the stat feature matrix first.
EvalReport run_protocol(const Dataset& ds, const StatSet& stats, const FeatureSchema& schema,
                        const SplitPlan& plan, const ClassifierSpec& clf,
                        const SelectionSpec& sel);

// Train on every row of one matrix, test on every row of the other; feature
// names must match.
EvalReport run_cross_dataset(const FeatureMatrix& train_fm, const FeatureMatrix& test_fm,
                             const ClassifierSpec& clf, const SelectionSpec& sel,
                             std::uint64_t seed);
EvalReport run_cross_dataset(const Dataset& train_ds, const Dataset& test_ds,
                             const StatSet& stats, const FeatureSchema& schema,
                             const ClassifierSpec& clf, const SelectionSpec& sel,
                             std::uint64_t seed);

}  // namespace veridict
