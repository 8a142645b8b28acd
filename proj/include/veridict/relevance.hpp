#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "veridict/classifiers.hpp"
#include "veridict/features.hpp"

namespace veridict {

struct RankedFeature {
  std::string name;
  double importance = 0.0;
};

// Descending by importance; ties broken lexicographically by name.
struct FeatureRanking {
  std::vector<RankedFeature> entries;
  std::string classifier_tag;
  int n_repeats = 0;
};

struct ImportanceConfig {
  ClassifierKind clf = ClassifierKind::svm;  // svm or rf only
  SvmParams svm;
  RfParams rf;
  int n_repeats = 10;
  double holdout_fraction = 0.3;
  int n_threads = 1;
};

// Held-out permutation importance: fit once on a stratified train split,
// then measure the mean held-out accuracy drop over n_repeats independent
// shuffles of each feature column. RNG streams are keyed by feature name and
// repeat, so the ranking is invariant to input column order and parallel runs
// match serial ones.
FeatureRanking permutation_importance(const FeatureMatrix& fm, const ImportanceConfig& config,
                                      std::uint64_t seed);

// Top ceil(f * d) feature names in ranking order; f must lie in (0, 1].
std::vector<std::string> select_top_fraction(const FeatureRanking& r, double f);

struct PcaState {
  std::vector<double> mean;         // column means of the fit data
  std::vector<double> components;   // n_components x n_features, row-major
  std::vector<double> eigenvalues;  // all n_features, descending
  std::size_t n_features = 0;
  std::size_t n_components = 0;
  double explained_ratio = 0.0;
};

// Principal components retaining at least variance_threshold of the total
// variance; expects standardized input. The projection state is reusable on
// held-out rows.
std::pair<FeatureMatrix, PcaState> pca_reduce(const FeatureMatrix& fm, double variance_threshold);
FeatureMatrix pca_apply(const PcaState& state, const FeatureMatrix& fm);

void write_ranking_csv(const FeatureRanking& r, const std::filesystem::path& file);

}  // namespace veridict
