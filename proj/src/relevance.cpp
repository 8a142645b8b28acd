#include "veridict/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "veridict/parallel.hpp"
#include "veridict/splits.hpp"
#include "veridict/textio.hpp"

namespace veridict {

namespace {

double accuracy_against(const std::vector<Label>& truth, const std::vector<Label>& pred) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) ok += truth[i] == pred[i];
  return static_cast<double>(ok) / static_cast<double>(truth.size());
}

TrainedModel fit_for_importance(const FeatureMatrix& train, const ImportanceConfig& config,
                                std::uint64_t seed) {
  if (config.clf == ClassifierKind::svm) return fit_svm(train, config.svm, seed);
  if (config.clf == ClassifierKind::rf) return fit_rf(train, config.rf, seed);
  throw ValidationError("permutation importance supports svm or rf classifiers only");
}

// Jacobi eigendecomposition of a symmetric matrix. Returns eigenvalues and
// the matching eigenvectors as rows of `vectors`.
void jacobi_eigen(std::vector<double> a, std::size_t d, std::vector<double>& eigenvalues,
                  std::vector<double>& vectors) {
  std::vector<double> v(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t p = 0; p < d; ++p) {
      diag += a[p * d + p] * a[p * d + p];
      for (std::size_t q = p + 1; q < d; ++q) off += a[p * d + q] * a[p * d + q];
    }
    if (off <= 1e-26 * (diag + 1e-300)) break;

    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) {
        double apq = a[p * d + q];
        if (apq == 0.0) continue;
        double theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          double akp = a[k * d + p], akq = a[k * d + q];
          a[k * d + p] = c * akp - s * akq;
          a[k * d + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          double apk = a[p * d + k], aqk = a[q * d + k];
          a[p * d + k] = c * apk - s * aqk;
          a[q * d + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          double vkp = v[k * d + p], vkq = v[k * d + q];
          v[k * d + p] = c * vkp - s * vkq;
          v[k * d + q] = s * vkp + c * vkq;
        }
      }
  }

  // Sort descending by eigenvalue; canonicalize eigenvector signs.
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a[i * d + i] > a[j * d + j]; });
  eigenvalues.resize(d);
  vectors.assign(d * d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    std::size_t src = order[r];
    eigenvalues[r] = a[src * d + src];
    double pivot = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      double val = v[k * d + src];
      if (std::abs(val) > std::abs(pivot)) pivot = val;
      vectors[r * d + k] = val;
    }
    if (pivot < 0.0)
      for (std::size_t k = 0; k < d; ++k) vectors[r * d + k] = -vectors[r * d + k];
  }
}

}  // namespace

FeatureRanking permutation_importance(const FeatureMatrix& fm, const ImportanceConfig& config,
                                      std::uint64_t seed) {
  if (config.n_repeats < 1) throw ValidationError("importance n_repeats must be >= 1");
  if (!(config.holdout_fraction > 0.0 && config.holdout_fraction < 1.0))
    throw ValidationError("holdout fraction must lie in (0, 1)");
  {
    bool t = false, d = false;
    for (Label l : fm.labels) (l == Label::truth ? t : d) = true;
    if (!t || !d) throw ValidationError("permutation importance needs both classes");
  }

  // Canonical column order by name: the ranking must not depend on how the
  // caller ordered the matrix.
  std::vector<std::size_t> canon(fm.n_cols);
  std::iota(canon.begin(), canon.end(), 0);
  std::sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
    return fm.feature_names[a] < fm.feature_names[b];
  });
  FeatureMatrix m = fm.select_columns(canon);

  Rng split_rng(derive_seed(seed, 0x53504C4954ULL));
  auto [train_idx, hold_idx] =
      random_split(m.labels, 1.0 - config.holdout_fraction, true, split_rng);
  if (train_idx.empty() || hold_idx.empty())
    throw ValidationError("importance split left an empty side; need more rows");
  {
    bool t = false, d = false;
    for (std::size_t i : train_idx) (m.labels[i] == Label::truth ? t : d) = true;
    if (!t || !d) throw ValidationError("importance train split lost a class; need more rows");
  }

  FeatureMatrix train = m.select_rows(train_idx);
  std::vector<std::size_t> all_train(train.n_rows);
  std::iota(all_train.begin(), all_train.end(), 0);
  auto [train_std, scaler] = standardize(train, all_train);
  TrainedModel model = fit_for_importance(train_std, config, derive_seed(seed, 0x464954ULL));
  model.scaler = scaler;

  FeatureMatrix holdout = m.select_rows(hold_idx);
  double baseline = accuracy_against(holdout.labels, predict(model, holdout));

  std::vector<double> importance(m.n_cols, 0.0);
  parallel_for(m.n_cols, config.n_threads, [&](std::size_t c) {
    FeatureMatrix shuffled = holdout;
    std::vector<double> original(holdout.n_rows);
    for (std::size_t r = 0; r < holdout.n_rows; ++r) original[r] = holdout.at(r, c);
    double drop_sum = 0.0;
    for (int rep = 0; rep < config.n_repeats; ++rep) {
      Rng rng(derive_seed(seed, hash_string(m.feature_names[c]),
                          static_cast<std::uint64_t>(rep) + 1));
      std::vector<double> col = original;
      rng.shuffle(col);
      for (std::size_t r = 0; r < shuffled.n_rows; ++r) shuffled.at(r, c) = col[r];
      double acc = accuracy_against(shuffled.labels, predict(model, shuffled));
      drop_sum += baseline - acc;
    }
    importance[c] = drop_sum / static_cast<double>(config.n_repeats);
  });

  FeatureRanking ranking;
  ranking.classifier_tag = to_string(config.clf);
  ranking.n_repeats = config.n_repeats;
  for (std::size_t c = 0; c < m.n_cols; ++c)
    ranking.entries.push_back({m.feature_names[c], importance[c]});
  std::sort(ranking.entries.begin(), ranking.entries.end(),
            [](const RankedFeature& a, const RankedFeature& b) {
              if (a.importance != b.importance) return a.importance > b.importance;
              return a.name < b.name;
            });
  return ranking;
}

std::vector<std::string> select_top_fraction(const FeatureRanking& r, double f) {
  if (r.entries.empty()) throw ValidationError("ranking is empty");
  if (!(f > 0.0 && f <= 1.0)) throw ValidationError("selection fraction must lie in (0, 1]");
  std::size_t k = static_cast<std::size_t>(
      std::ceil(f * static_cast<double>(r.entries.size())));
  k = std::min(k, r.entries.size());
  std::vector<std::string> names;
  names.reserve(k);
  for (std::size_t i = 0; i < k; ++i) names.push_back(r.entries[i].name);
  return names;
}

std::pair<FeatureMatrix, PcaState> pca_reduce(const FeatureMatrix& fm, double variance_threshold) {
  if (!(variance_threshold > 0.0 && variance_threshold <= 1.0))
    throw ValidationError("variance threshold must lie in (0, 1]");
  if (fm.n_rows < 2) throw ValidationError("pca needs at least 2 rows");

  const std::size_t d = fm.n_cols;
  PcaState st;
  st.n_features = d;
  st.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < fm.n_rows; ++r)
    for (std::size_t c = 0; c < d; ++c) st.mean[c] += fm.at(r, c);
  for (double& v : st.mean) v /= static_cast<double>(fm.n_rows);

  std::vector<double> cov(d * d, 0.0);
  for (std::size_t r = 0; r < fm.n_rows; ++r)
    for (std::size_t i = 0; i < d; ++i) {
      double di = fm.at(r, i) - st.mean[i];
      for (std::size_t j = i; j < d; ++j) cov[i * d + j] += di * (fm.at(r, j) - st.mean[j]);
    }
  double denom = static_cast<double>(fm.n_rows - 1);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      cov[i * d + j] /= denom;
      cov[j * d + i] = cov[i * d + j];
    }

  std::vector<double> vectors;
  jacobi_eigen(std::move(cov), d, st.eigenvalues, vectors);

  double total = 0.0;
  for (double ev : st.eigenvalues) total += std::max(ev, 0.0);
  std::size_t k = 1;
  if (total > 0.0) {
    double cum = 0.0;
    for (k = 0; k < d;) {
      cum += std::max(st.eigenvalues[k], 0.0);
      ++k;
      if (cum / total >= variance_threshold) break;
    }
    st.explained_ratio = 0.0;
    double c2 = 0.0;
    for (std::size_t i = 0; i < k; ++i) c2 += std::max(st.eigenvalues[i], 0.0);
    st.explained_ratio = c2 / total;
  }
  st.n_components = k;
  st.components.assign(vectors.begin(),
                       vectors.begin() + static_cast<std::ptrdiff_t>(k * d));

  return {pca_apply(st, fm), st};
}

FeatureMatrix pca_apply(const PcaState& state, const FeatureMatrix& fm) {
  if (fm.n_cols != state.n_features)
    throw ValidationError("pca projection width does not match matrix");
  FeatureMatrix out;
  out.sample_ids = fm.sample_ids;
  out.dataset_ids = fm.dataset_ids;
  out.labels = fm.labels;
  out.n_rows = fm.n_rows;
  out.n_cols = state.n_components;
  for (std::size_t k = 0; k < state.n_components; ++k) {
    out.feature_names.push_back("PC" + std::to_string(k + 1));
    out.feature_modalities.push_back("pca");
  }
  out.values.resize(out.n_rows * out.n_cols);
  for (std::size_t r = 0; r < fm.n_rows; ++r)
    for (std::size_t k = 0; k < state.n_components; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < state.n_features; ++c)
        s += (fm.at(r, c) - state.mean[c]) * state.components[k * state.n_features + c];
      out.at(r, k) = s;
    }
  return out;
}

void write_ranking_csv(const FeatureRanking& r, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file.string());
  out << "rank,feature,importance\n";
  for (std::size_t i = 0; i < r.entries.size(); ++i)
    out << (i + 1) << "," << r.entries[i].name << "," << format_double(r.entries[i].importance)
        << "\n";
}

}  // namespace veridict
