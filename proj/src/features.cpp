#include "veridict/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "veridict/textio.hpp"

namespace veridict {

namespace {

const Stat kAllStats[] = {Stat::mean, Stat::stddev, Stat::min,      Stat::max,
                          Stat::median, Stat::skewness, Stat::kurtosis};

}  // namespace

const char* to_string(Stat s) {
  switch (s) {
    case Stat::mean: return "mean";
    case Stat::stddev: return "std";
    case Stat::min: return "min";
    case Stat::max: return "max";
    case Stat::median: return "median";
    case Stat::skewness: return "skewness";
    case Stat::kurtosis: return "kurtosis";
  }
  return "?";
}

Stat parse_stat(const std::string& s) {
  for (Stat st : kAllStats)
    if (s == to_string(st)) return st;
  throw ValidationError("unknown statistic '" + s + "'");
}

StatSet StatSet::all() {
  StatSet s;
  s.stats.assign(std::begin(kAllStats), std::end(kAllStats));
  return s;
}

StatSet StatSet::parse(const std::string& comma_list) {
  StatSet out;
  std::stringstream ss(comma_list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    Stat st = parse_stat(tok);
    if (std::find(out.stats.begin(), out.stats.end(), st) != out.stats.end())
      throw ValidationError("duplicate statistic '" + tok + "'");
    out.stats.push_back(st);
  }
  if (out.stats.empty()) throw ValidationError("statistic set must be non-empty");
  return out;
}

std::map<Stat, double> summarize_series(std::span<const double> x, const StatSet& stats) {
  if (x.empty()) throw ValidationError("cannot summarize an empty series");
  if (stats.stats.empty()) throw ValidationError("statistic set must be non-empty");

  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  double mn = x[0], mx = x[0];
  for (double v : x) {
    double d = v - mean;
    double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }

  std::map<Stat, double> out;
  for (Stat st : stats.stats) {
    double v = 0.0;
    switch (st) {
      case Stat::mean:
        v = mean;
        break;
      case Stat::stddev:
        v = x.size() == 1 ? 0.0 : std::sqrt(m2 / (n - 1.0));
        break;
      case Stat::min:
        v = mn;
        break;
      case Stat::max:
        v = mx;
        break;
      case Stat::median: {
        std::vector<double> sorted(x.begin(), x.end());
        std::sort(sorted.begin(), sorted.end());
        std::size_t h = sorted.size() / 2;
        v = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
        break;
      }
      case Stat::skewness:
        v = m2 == 0.0 ? 0.0 : (m3 / n) / std::pow(m2 / n, 1.5);
        break;
      case Stat::kurtosis:
        v = m2 == 0.0 ? 0.0 : (m4 / n) / ((m2 / n) * (m2 / n)) - 3.0;
        break;
    }
    out[st] = v;
  }
  return out;
}

std::vector<std::string> base_feature_names(const FeatureSchema& schema) {
  std::vector<std::string> names = {"Gaze_yaw", "Gaze_pitch", "Headpose_yaw", "Headpose_pitch",
                                    "Headpose_roll"};
  for (const auto& au : schema.au_names) names.push_back(au);
  for (const auto& e : FeatureSchema::emotion_names()) names.push_back("Emotion_" + e);
  if (schema.include_valence_arousal) {
    names.push_back("Valence");
    names.push_back("Arousal");
  }
  return names;
}

std::vector<std::string> base_feature_modalities(const FeatureSchema& schema) {
  std::vector<std::string> m = {"gaze", "gaze", "pose", "pose", "pose"};
  m.insert(m.end(), schema.au_names.size(), "au");
  m.insert(m.end(), 8, "emotion");
  if (schema.include_valence_arousal) m.insert(m.end(), 2, "emotion");
  return m;
}

std::size_t base_feature_count(const FeatureSchema& schema) {
  return 5 + schema.au_names.size() + 8 + (schema.include_valence_arousal ? 2 : 0);
}

std::vector<double> base_feature_series(const Sample& s, std::size_t base_index,
                                        const FeatureSchema& schema) {
  std::vector<double> out;
  out.reserve(s.frames.size());
  const std::size_t n_au = schema.au_names.size();
  for (const auto& f : s.frames) {
    double v = 0.0;
    if (base_index < 5) {
      switch (base_index) {
        case 0: v = f.gaze_yaw; break;
        case 1: v = f.gaze_pitch; break;
        case 2: v = f.head_yaw; break;
        case 3: v = f.head_pitch; break;
        default: v = f.head_roll; break;
      }
    } else if (base_index < 5 + n_au) {
      v = f.au[base_index - 5];
    } else if (base_index < 5 + n_au + 8) {
      v = f.emotion_probs[base_index - 5 - n_au];
    } else if (base_index == 5 + n_au + 8) {
      v = f.valence;
    } else {
      v = f.arousal;
    }
    out.push_back(v);
  }
  return out;
}

std::vector<double> frame_vector(const FrameFeatures& f, const FeatureSchema& schema) {
  std::vector<double> v = {f.gaze_yaw, f.gaze_pitch, f.head_yaw, f.head_pitch, f.head_roll};
  v.insert(v.end(), f.au.begin(), f.au.end());
  v.insert(v.end(), f.emotion_probs.begin(), f.emotion_probs.end());
  if (schema.include_valence_arousal) {
    v.push_back(f.valence);
    v.push_back(f.arousal);
  }
  return v;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix out;
  out.feature_names = feature_names;
  out.feature_modalities = feature_modalities;
  out.n_rows = rows.size();
  out.n_cols = n_cols;
  out.values.reserve(rows.size() * n_cols);
  for (std::size_t r : rows) {
    if (r >= n_rows) throw ValidationError("row index out of range");
    out.sample_ids.push_back(sample_ids[r]);
    out.dataset_ids.push_back(dataset_ids[r]);
    out.labels.push_back(labels[r]);
    out.values.insert(out.values.end(), values.begin() + static_cast<std::ptrdiff_t>(r * n_cols),
                      values.begin() + static_cast<std::ptrdiff_t>((r + 1) * n_cols));
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> cols) const {
  FeatureMatrix out;
  out.sample_ids = sample_ids;
  out.dataset_ids = dataset_ids;
  out.labels = labels;
  out.n_rows = n_rows;
  out.n_cols = cols.size();
  for (std::size_t c : cols) {
    if (c >= n_cols) throw ValidationError("column index out of range");
    out.feature_names.push_back(feature_names[c]);
    out.feature_modalities.push_back(feature_modalities[c]);
  }
  out.values.resize(n_rows * cols.size());
  for (std::size_t r = 0; r < n_rows; ++r)
    for (std::size_t j = 0; j < cols.size(); ++j) out.at(r, j) = at(r, cols[j]);
  return out;
}

FeatureMatrix FeatureMatrix::filter_modalities(const std::string& comma_list) const {
  if (comma_list == "all" || comma_list.empty()) return *this;
  std::set<std::string> wanted;
  std::stringstream ss(comma_list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    if (tok != "gaze" && tok != "pose" && tok != "au" && tok != "emotion" && tok != "manual")
      throw ValidationError("unknown modality '" + tok + "'");
    wanted.insert(tok);
  }
  if (wanted.empty()) throw ValidationError("empty modality filter");
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < n_cols; ++c)
    if (wanted.count(feature_modalities[c])) cols.push_back(c);
  if (cols.empty()) throw ValidationError("modality filter selects no columns");
  return select_columns(cols);
}

std::size_t FeatureMatrix::column_index(const std::string& name) const {
  auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) throw ValidationError("unknown feature '" + name + "'");
  return static_cast<std::size_t>(it - feature_names.begin());
}

FeatureMatrix build_feature_matrix(const Dataset& ds, const StatSet& stats,
                                   const FeatureSchema& schema) {
  if (ds.samples.empty()) throw ValidationError("cannot build features from an empty dataset");
  for (const auto& s : ds.samples)
    if (s.au_names != schema.au_names)
      throw ValidationError("sample '" + s.sample_id + "' AU set does not match schema");

  const auto bases = base_feature_names(schema);
  const auto modalities = base_feature_modalities(schema);

  FeatureMatrix fm;
  for (std::size_t b = 0; b < bases.size(); ++b)
    for (Stat st : stats.stats) {
      fm.feature_names.push_back(bases[b] + "_" + to_string(st));
      fm.feature_modalities.push_back(modalities[b]);
    }
  fm.n_rows = ds.samples.size();
  fm.n_cols = fm.feature_names.size();
  fm.values.resize(fm.n_rows * fm.n_cols);

  for (std::size_t r = 0; r < ds.samples.size(); ++r) {
    const Sample& s = ds.samples[r];
    fm.sample_ids.push_back(s.sample_id);
    fm.dataset_ids.push_back(s.dataset_id);
    fm.labels.push_back(s.label);
    std::size_t c = 0;
    for (std::size_t b = 0; b < bases.size(); ++b) {
      auto series = base_feature_series(s, b, schema);
      auto summary = summarize_series(series, stats);
      for (Stat st : stats.stats) fm.at(r, c++) = summary.at(st);
    }
  }
  return fm;
}

FeatureMatrix to_feature_matrix(const ManualFeatureTable& table) {
  FeatureMatrix fm;
  fm.feature_names = table.feature_names;
  fm.feature_modalities.assign(table.feature_names.size(), "manual");
  fm.sample_ids = table.sample_ids;
  fm.dataset_ids.assign(table.n_rows, "manual");
  fm.labels = table.labels;
  fm.n_rows = table.n_rows;
  fm.n_cols = table.feature_names.size();
  fm.values = table.values;
  return fm;
}

void Scaler::apply_row(double* row, std::size_t n) const {
  if (empty()) return;
  if (n != mean.size()) throw ValidationError("scaler width does not match row width");
  for (std::size_t c = 0; c < n; ++c)
    if (std[c] != 0.0) row[c] = (row[c] - mean[c]) / std[c];
}

Scaler fit_scaler(const FeatureMatrix& fm, std::span<const std::size_t> reference_rows) {
  if (reference_rows.empty()) throw ValidationError("scaler reference rows must be non-empty");
  Scaler s;
  s.mean.assign(fm.n_cols, 0.0);
  s.std.assign(fm.n_cols, 0.0);
  const double n = static_cast<double>(reference_rows.size());
  for (std::size_t r : reference_rows)
    for (std::size_t c = 0; c < fm.n_cols; ++c) s.mean[c] += fm.at(r, c);
  for (double& m : s.mean) m /= n;
  if (reference_rows.size() > 1) {
    for (std::size_t r : reference_rows)
      for (std::size_t c = 0; c < fm.n_cols; ++c) {
        double d = fm.at(r, c) - s.mean[c];
        s.std[c] += d * d;
      }
    for (double& v : s.std) v = std::sqrt(v / (n - 1.0));
  }
  return s;
}

FeatureMatrix apply_scaler(const FeatureMatrix& fm, const Scaler& s) {
  FeatureMatrix out = fm;
  if (s.empty()) return out;
  for (std::size_t r = 0; r < out.n_rows; ++r) s.apply_row(&out.values[r * out.n_cols], out.n_cols);
  return out;
}

std::pair<FeatureMatrix, Scaler> standardize(const FeatureMatrix& fm,
                                             std::span<const std::size_t> reference_rows) {
  Scaler s = fit_scaler(fm, reference_rows);
  return {apply_scaler(fm, s), s};
}

void write_feature_matrix_csv(const FeatureMatrix& fm, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file.string());
  out << "sample_id,dataset_id,label";
  for (const auto& n : fm.feature_names) out << "," << n;
  out << "\n";
  for (std::size_t r = 0; r < fm.n_rows; ++r) {
    out << fm.sample_ids[r] << "," << fm.dataset_ids[r] << "," << to_string(fm.labels[r]);
    for (std::size_t c = 0; c < fm.n_cols; ++c) out << "," << format_double(fm.at(r, c));
    out << "\n";
  }
}

}  // namespace veridict
