#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "veridict/data.hpp"
#include "veridict/types.hpp"

namespace veridict {

enum class Stat { mean, stddev, min, max, median, skewness, kurtosis };

const char* to_string(Stat s);
Stat parse_stat(const std::string& s);

// Ordered, non-empty subset of the seven summary statistics.
struct StatSet {
  std::vector<Stat> stats;

  static StatSet all();
  static StatSet parse(const std::string& comma_list);
  std::size_t size() const { return stats.size(); }
};

// Sample std (n-1 denominator, 0 if n = 1); Fisher-Pearson skewness and excess
// kurtosis from population moments, both defined as 0 when std = 0; median of
// an even-length series averages the two middle values.
std::map<Stat, double> summarize_series(std::span<const double> x, const StatSet& stats);

// Per-frame base features under a schema, in fixed order:
//   Gaze_yaw, Gaze_pitch, Headpose_yaw, Headpose_pitch, Headpose_roll,
//   <AU names>, Emotion_<classes...>[, Valence, Arousal]
std::vector<std::string> base_feature_names(const FeatureSchema& schema);
// Modality tag per base feature: gaze | pose | au | emotion.
std::vector<std::string> base_feature_modalities(const FeatureSchema& schema);
std::size_t base_feature_count(const FeatureSchema& schema);
// Time series of one base feature over a sample's frames.
std::vector<double> base_feature_series(const Sample& s, std::size_t base_index,
                                        const FeatureSchema& schema);
// All base features of one frame, in base order (used by sequence models).
std::vector<double> frame_vector(const FrameFeatures& f, const FeatureSchema& schema);

struct FeatureMatrix {
  std::vector<std::string> feature_names;       // unique, `<base>_<stat>` for stat features
  std::vector<std::string> feature_modalities;  // per column
  std::vector<std::string> sample_ids;
  std::vector<std::string> dataset_ids;
  std::vector<Label> labels;
  std::size_t n_rows = 0, n_cols = 0;
  std::vector<double> values;  // row-major, all finite

  double at(std::size_t r, std::size_t c) const { return values[r * n_cols + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * n_cols + c]; }

  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  FeatureMatrix select_columns(std::span<const std::size_t> cols) const;
  // Columns whose modality tag is in the comma list ("gaze,au"); "all" keeps everything.
  FeatureMatrix filter_modalities(const std::string& comma_list) const;
  std::size_t column_index(const std::string& name) const;  // throws if absent
};

// One row per sample; columns ordered base-feature-major then stat order.
FeatureMatrix build_feature_matrix(const Dataset& ds, const StatSet& stats,
                                   const FeatureSchema& schema);

FeatureMatrix to_feature_matrix(const ManualFeatureTable& table);

// Per-column z-scoring state. Columns with zero reference std pass through.
struct Scaler {
  std::vector<double> mean, std;

  bool empty() const { return mean.empty(); }
  void apply_row(double* row, std::size_t n) const;
};

Scaler fit_scaler(const FeatureMatrix& fm, std::span<const std::size_t> reference_rows);
FeatureMatrix apply_scaler(const FeatureMatrix& fm, const Scaler& s);
// Convenience: fit on the reference rows, transform the whole matrix.
std::pair<FeatureMatrix, Scaler> standardize(const FeatureMatrix& fm,
                                             std::span<const std::size_t> reference_rows);

void write_feature_matrix_csv(const FeatureMatrix& fm, const std::filesystem::path& file);

}  // namespace veridict
