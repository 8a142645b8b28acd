#include "veridict/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "veridict/metrics.hpp"
#include "veridict/rng.hpp"
#include "veridict/textio.hpp"

namespace veridict {

namespace {

constexpr double kBceClampLo = 1e-7;
constexpr double kBceClampHi = 1.0 - 1e-7;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Post-activation values of one direction's pass over one sample.
struct DirectionTrace {
  std::vector<double> gates;  // L x 4H, order i,f,o,g
  std::vector<double> c;      // L x H
  std::vector<double> tc;     // L x H, tanh(c)
  std::vector<double> h;      // L x H
};

// Runs one direction over one sample. dir 1 reads the input reversed. When
// trace is null only the final hidden state is produced.
void run_direction(const RecurrentNet& net, int dir, const SequenceBatch& batch,
                   std::size_t sample, DirectionTrace* trace, std::vector<double>& h_final) {
  const std::size_t H = net.H, F = net.F, L = batch.L;
  const double* W = &net.theta[net.ofs_w(dir)];
  const double* U = &net.theta[net.ofs_u(dir)];
  const double* b = &net.theta[net.ofs_b(dir)];

  std::vector<double> h(H, 0.0), c(H, 0.0), z(4 * H);
  if (trace) {
    trace->gates.assign(L * 4 * H, 0.0);
    trace->c.assign(L * H, 0.0);
    trace->tc.assign(L * H, 0.0);
    trace->h.assign(L * H, 0.0);
  }

  for (std::size_t t = 0; t < L; ++t) {
    const double* x = batch.frame(sample, dir == 0 ? t : L - 1 - t);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double s = b[r];
      const double* wr = W + r * F;
      for (std::size_t k = 0; k < F; ++k) s += wr[k] * x[k];
      const double* ur = U + r * H;
      for (std::size_t k = 0; k < H; ++k) s += ur[k] * h[k];
      z[r] = s;
    }
    for (std::size_t k = 0; k < H; ++k) {
      double ig = sigmoid(z[k]);
      double fg = sigmoid(z[H + k]);
      double og = sigmoid(z[2 * H + k]);
      double gg = std::tanh(z[3 * H + k]);
      double cn = fg * c[k] + ig * gg;
      double tc = std::tanh(cn);
      double hn = og * tc;
      if (trace) {
        trace->gates[t * 4 * H + k] = ig;
        trace->gates[t * 4 * H + H + k] = fg;
        trace->gates[t * 4 * H + 2 * H + k] = og;
        trace->gates[t * 4 * H + 3 * H + k] = gg;
        trace->c[t * H + k] = cn;
        trace->tc[t * H + k] = tc;
        trace->h[t * H + k] = hn;
      }
      c[k] = cn;
      h[k] = hn;
    }
  }
  h_final = h;
}

// BPTT for one direction of one sample given d loss / d h_final.
void backward_direction(const RecurrentNet& net, int dir, const SequenceBatch& batch,
                        std::size_t sample, const DirectionTrace& trace,
                        const std::vector<double>& dh_final, std::vector<double>& grad) {
  const std::size_t H = net.H, F = net.F, L = batch.L;
  const double* U = &net.theta[net.ofs_u(dir)];
  double* gW = &grad[net.ofs_w(dir)];
  double* gU = &grad[net.ofs_u(dir)];
  double* gb = &grad[net.ofs_b(dir)];

  std::vector<double> dh = dh_final, dc(H, 0.0), dz(4 * H), dh_prev(H);
  for (std::size_t ti = L; ti-- > 0;) {
    const double* gates = &trace.gates[ti * 4 * H];
    const double* tc = &trace.tc[ti * H];
    const double* c_prev = ti == 0 ? nullptr : &trace.c[(ti - 1) * H];
    const double* h_prev = ti == 0 ? nullptr : &trace.h[(ti - 1) * H];
    const double* x = batch.frame(sample, dir == 0 ? ti : L - 1 - ti);

    for (std::size_t k = 0; k < H; ++k) {
      double ig = gates[k], fg = gates[H + k], og = gates[2 * H + k], gg = gates[3 * H + k];
      double dout = dh[k] * tc[k];  // d loss / d output gate
      dc[k] += dh[k] * og * (1.0 - tc[k] * tc[k]);
      double di = dc[k] * gg;
      double dg = dc[k] * ig;
      double df = dc[k] * (c_prev ? c_prev[k] : 0.0);
      dz[k] = di * ig * (1.0 - ig);
      dz[H + k] = df * fg * (1.0 - fg);
      dz[2 * H + k] = dout * og * (1.0 - og);
      dz[3 * H + k] = dg * (1.0 - gg * gg);
      dc[k] *= fg;  // carries to t-1
    }

    for (std::size_t r = 0; r < 4 * H; ++r) {
      double d = dz[r];
      if (d == 0.0) continue;
      double* wr = gW + r * F;
      for (std::size_t k = 0; k < F; ++k) wr[k] += d * x[k];
      if (h_prev) {
        double* ur = gU + r * H;
        for (std::size_t k = 0; k < H; ++k) ur[k] += d * h_prev[k];
      }
      gb[r] += d;
    }

    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double d = dz[r];
      if (d == 0.0) continue;
      const double* ur = U + r * H;
      for (std::size_t k = 0; k < H; ++k) dh_prev[k] += d * ur[k];
    }
    dh = dh_prev;
  }
}

double loss_term(SeqLoss kind, double s, double y, double& dloss_ds) {
  switch (kind) {
    case SeqLoss::mae:
      dloss_ds = s > y ? 1.0 : (s < y ? -1.0 : 0.0);
      return std::abs(s - y);
    case SeqLoss::bce: {
      double sc = std::clamp(s, kBceClampLo, kBceClampHi);
      // Gradient is zero in the clamped region.
      dloss_ds = (s > kBceClampLo && s < kBceClampHi) ? (sc - y) / (sc * (1.0 - sc)) : 0.0;
      return -(y * std::log(sc) + (1.0 - y) * std::log(1.0 - sc));
    }
    case SeqLoss::mse:
      dloss_ds = 2.0 * (s - y);
      return (s - y) * (s - y);
  }
  throw ValidationError("unknown loss kind");
}

}  // namespace

const char* to_string(SeqLoss k) {
  switch (k) {
    case SeqLoss::mae: return "mae";
    case SeqLoss::bce: return "bce";
    case SeqLoss::mse: return "mse";
  }
  return "?";
}

SeqLoss parse_seq_loss(const std::string& s) {
  if (s == "mae") return SeqLoss::mae;
  if (s == "bce") return SeqLoss::bce;
  if (s == "mse") return SeqLoss::mse;
  throw UsageError("unknown loss '" + s + "' (expected mae, bce, or mse)");
}

std::vector<double> resample_sample(const Sample& s, std::size_t L, const FeatureSchema& schema) {
  if (L < 2) throw ValidationError("sequence length must be >= 2");
  const std::size_t T = s.frames.size();
  if (T < 2) throw ValidationError("sample '" + s.sample_id + "' has fewer than 2 frames");
  const std::size_t F = base_feature_count(schema);

  std::vector<double> raw(T * F);
  for (std::size_t t = 0; t < T; ++t) {
    auto v = frame_vector(s.frames[t], schema);
    std::copy(v.begin(), v.end(), raw.begin() + static_cast<std::ptrdiff_t>(t * F));
  }

  std::vector<double> out(L * F);
  const double step = static_cast<double>(T - 1) / static_cast<double>(L - 1);
  for (std::size_t j = 0; j < L; ++j) {
    double pos = static_cast<double>(j) * step;
    std::size_t t0 = std::min(static_cast<std::size_t>(pos), T - 2);
    double frac = pos - static_cast<double>(t0);
    for (std::size_t k = 0; k < F; ++k)
      out[j * F + k] = (1.0 - frac) * raw[t0 * F + k] + frac * raw[(t0 + 1) * F + k];
  }
  return out;
}

namespace {

SequenceScaler fit_scaler_over(std::span<const std::vector<double>> resampled, std::size_t F) {
  SequenceScaler sc;
  sc.mean.assign(F, 0.0);
  sc.std.assign(F, 0.0);
  std::size_t total = 0;
  for (const auto& r : resampled) total += r.size() / F;
  for (const auto& r : resampled)
    for (std::size_t i = 0; i < r.size(); ++i) sc.mean[i % F] += r[i];
  for (double& m : sc.mean) m /= static_cast<double>(total);
  if (total > 1) {
    for (const auto& r : resampled)
      for (std::size_t i = 0; i < r.size(); ++i) {
        double d = r[i] - sc.mean[i % F];
        sc.std[i % F] += d * d;
      }
    for (double& v : sc.std) v = std::sqrt(v / static_cast<double>(total - 1));
  }
  return sc;
}

}  // namespace

SequenceScaler fit_sequence_scaler(std::span<const Sample> samples, std::size_t L,
                                   const FeatureSchema& schema) {
  if (samples.empty()) throw ValidationError("cannot fit a scaler on zero samples");
  std::vector<std::vector<double>> resampled;
  resampled.reserve(samples.size());
  for (const auto& s : samples) resampled.push_back(resample_sample(s, L, schema));
  return fit_scaler_over(resampled, base_feature_count(schema));
}

SequenceBatch make_batch(std::span<const Sample> samples, std::size_t L,
                         const FeatureSchema& schema, const SequenceScaler* scaler) {
  SequenceBatch b;
  b.n = samples.size();
  b.L = L;
  b.F = base_feature_count(schema);
  b.x.reserve(b.n * L * b.F);
  for (const auto& s : samples) {
    auto r = resample_sample(s, L, schema);
    if (scaler) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        std::size_t k = i % b.F;
        if (scaler->std[k] != 0.0) r[i] = (r[i] - scaler->mean[k]) / scaler->std[k];
      }
    }
    b.x.insert(b.x.end(), r.begin(), r.end());
    b.labels01.push_back(s.label == Label::deception ? 1.0 : 0.0);
  }
  return b;
}

RecurrentNet RecurrentNet::init(std::size_t input_size, std::size_t hidden_size,
                                std::uint64_t seed) {
  if (input_size == 0 || hidden_size == 0)
    throw ValidationError("network sizes must be positive");
  RecurrentNet net;
  net.F = input_size;
  net.H = hidden_size;
  net.theta.assign(2 * net.block_size() + 2 * net.H + 1, 0.0);

  Rng rng(derive_seed(seed, 0x4E455449ULL));
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  for (int dir = 0; dir < 2; ++dir) {
    for (std::size_t i = 0; i < 4 * net.H * net.F; ++i)
      net.theta[net.ofs_w(dir) + i] = rng.uniform(-k, k);
    for (std::size_t i = 0; i < 4 * net.H * net.H; ++i)
      net.theta[net.ofs_u(dir) + i] = rng.uniform(-k, k);
    // Forget-gate bias starts at 1 so early training does not flush memory.
    for (std::size_t i = 0; i < net.H; ++i) net.theta[net.ofs_b(dir) + net.H + i] = 1.0;
  }
  for (std::size_t i = 0; i < 2 * net.H; ++i) net.theta[net.ofs_v(0) + i] = rng.uniform(-k, k);
  return net;
}

std::vector<double> seq_forward(const RecurrentNet& net, const SequenceBatch& batch) {
  if (batch.F != net.F) throw ValidationError("batch feature width does not match network");
  std::vector<double> scores(batch.n);
  std::vector<double> hf, hb;
  const double* vf = &net.theta[net.ofs_v(0)];
  const double* vb = &net.theta[net.ofs_v(1)];
  for (std::size_t s = 0; s < batch.n; ++s) {
    run_direction(net, 0, batch, s, nullptr, hf);
    run_direction(net, 1, batch, s, nullptr, hb);
    double logit = net.theta[net.ofs_out_bias()];
    for (std::size_t k = 0; k < net.H; ++k) logit += vf[k] * hf[k] + vb[k] * hb[k];
    scores[s] = sigmoid(logit);
  }
  return scores;
}

double seq_loss(SeqLoss kind, std::span<const double> scores, std::span<const double> labels01) {
  if (scores.size() != labels01.size() || scores.empty())
    throw ValidationError("scores and labels must be equal-length and non-empty");
  double total = 0.0, dummy;
  for (std::size_t i = 0; i < scores.size(); ++i)
    total += loss_term(kind, scores[i], labels01[i], dummy);
  return total / static_cast<double>(scores.size());
}

double seq_loss_and_grad(const RecurrentNet& net, const SequenceBatch& batch, SeqLoss kind,
                         std::vector<double>& grad) {
  if (batch.F != net.F) throw ValidationError("batch feature width does not match network");
  if (batch.n == 0) throw ValidationError("empty batch");
  grad.assign(net.n_params(), 0.0);

  const double* vf = &net.theta[net.ofs_v(0)];
  const double* vb = &net.theta[net.ofs_v(1)];
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.n);
  DirectionTrace tf, tb;
  std::vector<double> hf, hb, dh(net.H);

  for (std::size_t s = 0; s < batch.n; ++s) {
    run_direction(net, 0, batch, s, &tf, hf);
    run_direction(net, 1, batch, s, &tb, hb);
    double logit = net.theta[net.ofs_out_bias()];
    for (std::size_t k = 0; k < net.H; ++k) logit += vf[k] * hf[k] + vb[k] * hb[k];
    double score = sigmoid(logit);

    double dloss_ds;
    total += loss_term(kind, score, batch.labels01[s], dloss_ds);
    double dlogit = dloss_ds * score * (1.0 - score) * inv_n;

    grad[net.ofs_out_bias()] += dlogit;
    for (std::size_t k = 0; k < net.H; ++k) {
      grad[net.ofs_v(0) + k] += dlogit * hf[k];
      grad[net.ofs_v(1) + k] += dlogit * hb[k];
    }
    if (dlogit != 0.0) {
      for (std::size_t k = 0; k < net.H; ++k) dh[k] = dlogit * vf[k];
      backward_direction(net, 0, batch, s, tf, dh, grad);
      for (std::size_t k = 0; k < net.H; ++k) dh[k] = dlogit * vb[k];
      backward_direction(net, 1, batch, s, tb, dh, grad);
    }
  }
  return total * inv_n;
}

SeqTrainResult train_sequence(const SequenceBatch& train, const SequenceBatch& val,
                              const SeqTrainConfig& config) {
  if (train.n == 0) throw ValidationError("empty training batch");
  {
    bool t = false, d = false;
    for (double y : train.labels01) (y == 0.0 ? t : d) = true;
    if (!t || !d) throw ValidationError("sequence training needs both classes");
  }
  if (config.epochs < 0) throw ValidationError("epochs must be non-negative");

  SeqTrainResult res;
  res.net = RecurrentNet::init(train.F, config.hidden, config.seed);
  std::vector<double> grad, velocity(res.net.n_params(), 0.0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss = seq_loss_and_grad(res.net, train, config.loss, grad);
    if (!std::isfinite(loss))
      throw Error("sequence training diverged at epoch " + std::to_string(epoch) +
                  " (non-finite loss); lower the learning rate");
    for (std::size_t i = 0; i < velocity.size(); ++i) {
      velocity[i] = config.momentum * velocity[i] - config.lr * grad[i];
      res.net.theta[i] += velocity[i];
    }

    SeqEpochStats st;
    st.epoch = epoch;
    st.train_loss = loss;
    if (val.n > 0) {
      auto scores = seq_forward(res.net, val);
      std::size_t ok = 0;
      for (std::size_t i = 0; i < scores.size(); ++i)
        ok += (scores[i] > 0.5 ? 1.0 : 0.0) == val.labels01[i];
      st.val_accuracy = static_cast<double>(ok) / static_cast<double>(val.n);
      st.val_ccc = ccc(scores, val.labels01);
    }
    res.curve.push_back(st);
  }
  return res;
}

std::vector<double> sequence_scores(const SequenceModel& m, std::span<const Sample> samples) {
  SequenceBatch b = make_batch(samples, m.seq_len, m.schema, &m.scaler);
  return seq_forward(m.net, b);
}

nlohmann::ordered_json sequence_model_to_json(const SequenceModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "veridict-sequence-model";
  j["version"] = 1;
  j["input"] = m.net.F;
  j["hidden"] = m.net.H;
  j["seq_len"] = m.seq_len;
  j["loss"] = to_string(m.loss);
  j["schema"] = {{"au_names", m.schema.au_names},
                 {"include_valence_arousal", m.schema.include_valence_arousal}};
  j["scaler"] = {{"mean", m.scaler.mean}, {"std", m.scaler.std}};
  j["theta"] = m.net.theta;
  return j;
}

SequenceModel sequence_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "veridict-sequence-model")
      throw ValidationError("not a sequence model file");
    if (j.at("version").get<int>() != 1)
      throw ValidationError("unsupported sequence model version");
    SequenceModel m;
    m.net.F = j.at("input").get<std::size_t>();
    m.net.H = j.at("hidden").get<std::size_t>();
    m.seq_len = j.at("seq_len").get<std::size_t>();
    m.loss = parse_seq_loss(j.at("loss").get<std::string>());
    m.schema.au_names = j.at("schema").at("au_names").get<std::vector<std::string>>();
    m.schema.include_valence_arousal = j.at("schema").at("include_valence_arousal").get<bool>();
    m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    m.scaler.std = j.at("scaler").at("std").get<std::vector<double>>();
    m.net.theta = j.at("theta").get<std::vector<double>>();
    std::size_t expect = 2 * m.net.block_size() + 2 * m.net.H + 1;
    if (m.net.theta.size() != expect || m.scaler.mean.size() != m.net.F ||
        m.scaler.std.size() != m.net.F || base_feature_count(m.schema) != m.net.F)
      throw ValidationError("inconsistent sequence model dimensions");
    return m;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("malformed sequence model file: ") + e.what());
  }
}

void save_sequence_model(const SequenceModel& m, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write model file " + file.string());
  out << sequence_model_to_json(m).dump(2) << "\n";
}

SequenceModel load_sequence_model(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open model file " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("malformed sequence model file: ") + e.what());
  }
  return sequence_model_from_json(j);
}

void write_curve_csv(std::span<const SeqEpochStats> curve, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file.string());
  out << "epoch,train_loss,val_accuracy,val_ccc\n";
  for (const auto& st : curve)
    out << st.epoch << "," << format_double(st.train_loss) << ","
        << format_double(st.val_accuracy) << "," << format_double(st.val_ccc) << "\n";
}

}  // namespace veridict
