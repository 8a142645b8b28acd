#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "veridict/data.hpp"
#include "veridict/features.hpp"

namespace veridict {

enum class SeqLoss { mae, bce, mse };

const char* to_string(SeqLoss k);
SeqLoss parse_seq_loss(const std::string& s);

// Per-feature z-scoring state fitted on training sequences only.
struct SequenceScaler {
  std::vector<double> mean, std;  // std = 0 features pass through
};

// Fixed-length resampled sequences: x is n_samples * L * F, row-major by
// (sample, step, feature); labels01 holds 1 for deception.
struct SequenceBatch {
  std::size_t n = 0, L = 0, F = 0;
  std::vector<double> x;
  std::vector<double> labels01;

  const double* frame(std::size_t sample, std::size_t t) const {
    return &x[(sample * L + t) * F];
  }
};

// Linear time interpolation of a sample's base-feature series to exactly L
// steps, endpoints preserved. Samples with fewer than 2 frames are rejected.
std::vector<double> resample_sample(const Sample& s, std::size_t L, const FeatureSchema& schema);

SequenceScaler fit_sequence_scaler(std::span<const Sample> samples, std::size_t L,
                                   const FeatureSchema& schema);
SequenceBatch make_batch(std::span<const Sample> samples, std::size_t L,
                         const FeatureSchema& schema, const SequenceScaler* scaler);

// Single-layer bidirectional LSTM with a scalar logistic head. All
// parameters live in one flat vector; per-direction blocks are W (4H x F),
// U (4H x H), b (4H) in gate order i, f, o, g, followed by the two head
// vectors (H each) and the shared output bias.
struct RecurrentNet {
  std::size_t F = 0, H = 0;
  std::vector<double> theta;

  static RecurrentNet init(std::size_t input_size, std::size_t hidden_size, std::uint64_t seed);
  std::size_t n_params() const { return theta.size(); }

  std::size_t block_size() const { return 4 * H * F + 4 * H * H + 4 * H; }
  std::size_t ofs_w(int dir) const { return static_cast<std::size_t>(dir) * block_size(); }
  std::size_t ofs_u(int dir) const { return ofs_w(dir) + 4 * H * F; }
  std::size_t ofs_b(int dir) const { return ofs_u(dir) + 4 * H * H; }
  std::size_t ofs_v(int dir) const { return 2 * block_size() + static_cast<std::size_t>(dir) * H; }
  std::size_t ofs_out_bias() const { return 2 * block_size() + 2 * H; }
};

// Scores in (0, 1), one per batch sample.
std::vector<double> seq_forward(const RecurrentNet& net, const SequenceBatch& batch);

double seq_loss(SeqLoss kind, std::span<const double> scores, std::span<const double> labels01);

// Batch loss plus the full BPTT gradient (same layout as theta).
double seq_loss_and_grad(const RecurrentNet& net, const SequenceBatch& batch, SeqLoss kind,
                         std::vector<double>& grad);

struct SeqTrainConfig {
  SeqLoss loss = SeqLoss::mae;
  double lr = 0.05;
  double momentum = 0.9;
  int epochs = 100;
  std::size_t hidden = 32;
  std::uint64_t seed = 0;
};

struct SeqEpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_ccc = 0.0;
};

struct SeqTrainResult {
  RecurrentNet net;
  std::vector<SeqEpochStats> curve;
};

// Momentum gradient descent over full batches; aborts with a diagnostic on a
// non-finite loss. The validation batch may be empty (curve then carries
// zeros for the validation columns).
SeqTrainResult train_sequence(const SequenceBatch& train, const SequenceBatch& val,
                              const SeqTrainConfig& config);

// A trained sequence model bundled with its preprocessing.
struct SequenceModel {
  RecurrentNet net;
  SequenceScaler scaler;
  std::size_t seq_len = 0;
  SeqLoss loss = SeqLoss::mae;
  FeatureSchema schema;
};

std::vector<double> sequence_scores(const SequenceModel& m, std::span<const Sample> samples);

nlohmann::ordered_json sequence_model_to_json(const SequenceModel& m);
SequenceModel sequence_model_from_json(const nlohmann::json& j);
void save_sequence_model(const SequenceModel& m, const std::filesystem::path& file);
SequenceModel load_sequence_model(const std::filesystem::path& file);

void write_curve_csv(std::span<const SeqEpochStats> curve, const std::filesystem::path& file);

}  // namespace veridict
