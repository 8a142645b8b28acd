#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "veridict/types.hpp"

namespace veridict {

// Column layout of per-sample feature files. The AU set is configurable; the
// eight emotion classes are fixed.
struct FeatureSchema {
  std::vector<std::string> au_names = {"AU06", "AU10", "AU12", "AU14", "AU17"};
  bool include_valence_arousal = true;  // affects feature extraction, not file layout

  static const std::array<std::string, 8>& emotion_names();
  std::vector<std::string> csv_header() const;
};

struct FrameFeatures {
  double gaze_yaw = 0.0;    // radians
  double gaze_pitch = 0.0;  // radians
  double head_yaw = 0.0;    // degrees
  double head_pitch = 0.0;  // degrees
  double head_roll = 0.0;   // degrees
  std::vector<double> au;   // aligned with the sample's au_names, each in [0, 5]
  std::array<double, 8> emotion_probs{};  // simplex within 1e-6
  double valence = 0.0;     // [-1, 1]
  double arousal = 0.0;     // [-1, 1]

  bool operator==(const FrameFeatures&) const = default;
};

struct Sample {
  std::string sample_id;
  std::string subject_id;
  std::string dataset_id;
  Label label = Label::truth;
  double fps = 0.0;  // > 0
  std::vector<std::string> au_names;
  std::vector<FrameFeatures> frames;   // non-empty
  double dropped_fraction = 0.0;       // fraction of file rows dropped at load

  // dropped_fraction is load bookkeeping, not part of the sample's value.
  bool operator==(const Sample& o) const {
    return sample_id == o.sample_id && subject_id == o.subject_id && dataset_id == o.dataset_id &&
           label == o.label && fps == o.fps && au_names == o.au_names && frames == o.frames;
  }
};

struct Dataset {
  std::string dataset_id;
  std::vector<Sample> samples;  // unique sample_ids, ordered by sample_id

  bool operator==(const Dataset&) const = default;
};

// Loads a dataset directory: manifest.jsonl plus one CSV per sample. Rows
// holding any non-finite or invariant-violating value are dropped and counted;
// a sample losing more than half its rows is rejected with a diagnostic.
// Throws ValidationError when the manifest is missing/malformed, a label is
// unknown, or no sample survives.
Dataset load_dataset(const std::filesystem::path& dir, const FeatureSchema& schema,
                     std::vector<std::string>* diagnostics = nullptr);

void save_dataset(const Dataset& ds, const std::filesystem::path& dir,
                  const FeatureSchema& schema);

struct SynthConfig {
  std::string dataset_id = "synth";
  std::size_t n_samples = 200;
  std::size_t frames_per_sample = 120;  // nominal; actual lengths vary +/- 25%
  double truth_fraction = 0.5;
  double effect_mu_deg = 15.0;  // deceptive head-yaw mean shift, degrees
  double fps = 30.0;
};

// Seeded generator of two-class data. Deceptive samples carry a +mu degree
// head-yaw mean shift and an arousal variance inflated by (1 + mu/30), which
// is exactly x1.5 at the default mu = 15 and vanishes at mu = 0 so that a
// zero-effect dataset carries no class signal at all.
Dataset generate_synthetic(const SynthConfig& config, std::uint64_t seed,
                           const FeatureSchema& schema = {});

// Hand-annotated per-sample cue table (CSV: sample_id,label,<feature...>).
struct ManualFeatureTable {
  std::vector<std::string> feature_names;
  std::vector<std::string> sample_ids;
  std::vector<Label> labels;
  std::vector<double> values;  // row-major, n_rows x feature_names.size()
  std::size_t n_rows = 0;

  double at(std::size_t r, std::size_t c) const { return values[r * feature_names.size() + c]; }
};

ManualFeatureTable load_manual_table(const std::filesystem::path& file);

}  // namespace veridict
