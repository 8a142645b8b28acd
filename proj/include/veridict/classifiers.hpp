#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "veridict/features.hpp"
#include "veridict/types.hpp"

namespace veridict {

enum class ClassifierKind { trivial, svm, rf, sequence };

const char* to_string(ClassifierKind k);
ClassifierKind parse_classifier(const std::string& s);

struct SvmParams {
  double c = 1.0;       // inverse regularization strength, > 0
  int epochs = 500;
  double lr0 = 0.5;
};

struct RfParams {
  int n_trees = 100;
  int max_depth = 0;    // 0 = unlimited
  int mtry = 0;         // 0 = ceil(sqrt(n_features))
  int min_leaf = 1;
  bool bootstrap = true;  // off: every tree sees the full training set
  int n_threads = 1;
};

// Flat node array; feature < 0 marks a leaf carrying training class counts.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1, right = -1;
  std::uint32_t count_truth = 0, count_deception = 0;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // node 0 is the root

  // Vote of the leaf reached by x; leaf tie votes truth.
  Label predict(const double* x) const;
};

struct TrainedModel {
  ClassifierKind kind = ClassifierKind::trivial;
  std::vector<std::string> feature_names;
  Scaler scaler;            // empty = inputs already standardized upstream
  double threshold = 0.5;   // predict deception when score > threshold

  Label majority = Label::truth;          // trivial
  std::vector<double> weights;            // svm
  double bias = 0.0;                      // svm
  std::vector<DecisionTree> trees;        // rf
  double oob_accuracy = 0.0;              // rf; NaN when no row was out of bag
};

// Majority-vote baseline; tie predicts truth. Accuracy equals test-split
// majority prevalence by construction.
TrainedModel fit_trivial(const FeatureMatrix& fm);

// Linear SVM by full-batch subgradient descent on
//   J(w, b) = (1/(2c)) ||w||^2 + mean_i hinge(y_i (w . x_i + b))
// The mean (not sum) form makes the objective a function of the empirical
// distribution, so duplicated rows leave the solution unchanged. Expects
// standardized features; deception is the positive class.
TrainedModel fit_svm(const FeatureMatrix& fm, const SvmParams& params, std::uint64_t seed);

// Random forest with Gini splits on midpoint thresholds, mtry features per
// node, bootstrap resampling per tree, and deterministic tie-breaking
// (lowest feature index, then lowest threshold).
TrainedModel fit_rf(const FeatureMatrix& fm, const RfParams& params, std::uint64_t seed);

// Scores monotone in deception confidence: svm signed margin, rf deception
// vote fraction in [0, 1], trivial constant. Columns are matched to the
// model's feature names when the matrix is wider or ordered differently.
std::vector<double> predict_score(const TrainedModel& m, const FeatureMatrix& fm);
std::vector<Label> predict(const TrainedModel& m, const FeatureMatrix& fm);

nlohmann::ordered_json model_to_json(const TrainedModel& m);
TrainedModel model_from_json(const nlohmann::json& j);
void save_model(const TrainedModel& m, const std::filesystem::path& file);
TrainedModel load_model(const std::filesystem::path& file);

}  // namespace veridict
