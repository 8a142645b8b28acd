#include "veridict/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "veridict/parallel.hpp"
#include "veridict/rng.hpp"

namespace veridict {

namespace {

constexpr int kModelFormatVersion = 1;

void require_two_classes(const FeatureMatrix& fm) {
  bool t = false, d = false;
  for (Label l : fm.labels) (l == Label::truth ? t : d) = true;
  if (!t || !d) throw ValidationError("training data must contain both classes");
}

double gini(std::size_t truth, std::size_t deception) {
  std::size_t n = truth + deception;
  if (n == 0) return 0.0;
  double pt = static_cast<double>(truth) / static_cast<double>(n);
  double pd = static_cast<double>(deception) / static_cast<double>(n);
  return 1.0 - pt * pt - pd * pd;
}

struct TreeBuilder {
  const FeatureMatrix& fm;
  const RfParams& params;
  std::size_t mtry;
  Rng rng;
  DecisionTree tree;

  TreeBuilder(const FeatureMatrix& fm_, const RfParams& params_, std::size_t mtry_,
              std::uint64_t seed)
      : fm(fm_), params(params_), mtry(mtry_), rng(seed) {}

  int build(std::vector<std::size_t>& rows, int depth) {
    std::size_t ct = 0, cd = 0;
    for (std::size_t r : rows) (fm.labels[r] == Label::truth ? ct : cd)++;

    int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.back().count_truth = static_cast<std::uint32_t>(ct);
    tree.nodes.back().count_deception = static_cast<std::uint32_t>(cd);

    bool can_split = ct != 0 && cd != 0 &&
                     rows.size() >= 2 * static_cast<std::size_t>(params.min_leaf) &&
                     (params.max_depth == 0 || depth < params.max_depth);
    if (!can_split) return node_id;

    // Sample mtry candidate features without replacement, then scan them in
    // index order so the tie-break is independent of draw order.
    std::vector<std::size_t> feats(fm.n_cols);
    std::iota(feats.begin(), feats.end(), 0);
    for (std::size_t k = 0; k < mtry; ++k)
      std::swap(feats[k], feats[k + rng.uniform_index(fm.n_cols - k)]);
    feats.resize(mtry);
    std::sort(feats.begin(), feats.end());

    const double parent_imp = gini(ct, cd);
    double best_gain = 0.0, best_thr = 0.0;
    int best_feat = -1;
    std::vector<std::pair<double, Label>> order(rows.size());

    for (std::size_t f : feats) {
      for (std::size_t i = 0; i < rows.size(); ++i)
        order[i] = {fm.at(rows[i], f), fm.labels[rows[i]]};
      std::sort(order.begin(), order.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      std::size_t lt = 0, ld = 0;
      const double n = static_cast<double>(rows.size());
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        (order[i].second == Label::truth ? lt : ld)++;
        if (order[i].first == order[i + 1].first) continue;
        std::size_t nl = i + 1, nr = order.size() - nl;
        if (nl < static_cast<std::size_t>(params.min_leaf) ||
            nr < static_cast<std::size_t>(params.min_leaf))
          continue;
        double gain = parent_imp -
                      (static_cast<double>(nl) / n) * gini(lt, ld) -
                      (static_cast<double>(nr) / n) * gini(ct - lt, cd - ld);
        double thr = 0.5 * (order[i].first + order[i + 1].first);
        bool better = gain > best_gain + 1e-12;
        bool tied = std::abs(gain - best_gain) <= 1e-12 && best_feat >= 0;
        if (better || (tied && (static_cast<int>(f) < best_feat ||
                                (static_cast<int>(f) == best_feat && thr < best_thr)))) {
          best_gain = gain;
          best_feat = static_cast<int>(f);
          best_thr = thr;
        }
      }
    }
    if (best_feat < 0 || best_gain <= 1e-12) return node_id;

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows)
      (fm.at(r, static_cast<std::size_t>(best_feat)) <= best_thr ? left_rows : right_rows)
          .push_back(r);
    if (left_rows.empty() || right_rows.empty()) return node_id;  // degenerate threshold

    int left = build(left_rows, depth + 1);
    int right = build(right_rows, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].feature = best_feat;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = best_thr;
    tree.nodes[static_cast<std::size_t>(node_id)].left = left;
    tree.nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }
};

}  // namespace

const char* to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::trivial: return "trivial";
    case ClassifierKind::svm: return "svm";
    case ClassifierKind::rf: return "rf";
    case ClassifierKind::sequence: return "sequence";
  }
  return "?";
}

ClassifierKind parse_classifier(const std::string& s) {
  if (s == "trivial") return ClassifierKind::trivial;
  if (s == "svm") return ClassifierKind::svm;
  if (s == "rf") return ClassifierKind::rf;
  if (s == "sequence") return ClassifierKind::sequence;
  throw UsageError("unknown classifier '" + s + "'");
}

Label DecisionTree::predict(const double* x) const {
  int i = 0;
  while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  const TreeNode& leaf = nodes[static_cast<std::size_t>(i)];
  return leaf.count_deception > leaf.count_truth ? Label::deception : Label::truth;
}

TrainedModel fit_trivial(const FeatureMatrix& fm) {
  if (fm.n_rows == 0) throw ValidationError("cannot fit on empty data");
  std::size_t truth = 0;
  for (Label l : fm.labels) truth += l == Label::truth;
  TrainedModel m;
  m.kind = ClassifierKind::trivial;
  m.feature_names = fm.feature_names;
  m.majority = 2 * truth >= fm.n_rows ? Label::truth : Label::deception;  // tie -> truth
  m.threshold = 0.5;
  return m;
}

TrainedModel fit_svm(const FeatureMatrix& fm, const SvmParams& params, std::uint64_t seed) {
  (void)seed;  // zero init + full-batch updates are already deterministic
  require_two_classes(fm);
  if (!(params.c > 0.0)) throw ValidationError("svm c must be positive");
  if (params.epochs < 1) throw ValidationError("svm epochs must be >= 1");

  const std::size_t n = fm.n_rows, d = fm.n_cols;
  const double lambda = 1.0 / params.c;
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  std::vector<double> grad(d);

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = &fm.values[i * d];
      double y = fm.labels[i] == Label::deception ? 1.0 : -1.0;
      double margin = b;
      for (std::size_t cidx = 0; cidx < d; ++cidx) margin += w[cidx] * x[cidx];
      if (y * margin < 1.0) {
        for (std::size_t cidx = 0; cidx < d; ++cidx) grad[cidx] -= y * x[cidx];
        grad_b -= y;
      }
    }
    double lr = params.lr0 / (1.0 + static_cast<double>(epoch) / 50.0);
    double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t cidx = 0; cidx < d; ++cidx)
      w[cidx] -= lr * (lambda * w[cidx] + grad[cidx] * inv_n);
    b -= lr * grad_b * inv_n;
  }

  TrainedModel m;
  m.kind = ClassifierKind::svm;
  m.feature_names = fm.feature_names;
  m.weights = std::move(w);
  m.bias = b;
  m.threshold = 0.0;
  return m;
}

TrainedModel fit_rf(const FeatureMatrix& fm, const RfParams& params, std::uint64_t seed) {
  require_two_classes(fm);
  if (params.n_trees < 1) throw ValidationError("rf needs at least one tree");
  if (params.min_leaf < 1) throw ValidationError("rf min_leaf must be >= 1");

  std::size_t mtry = params.mtry > 0
                         ? std::min<std::size_t>(static_cast<std::size_t>(params.mtry), fm.n_cols)
                         : static_cast<std::size_t>(
                               std::ceil(std::sqrt(static_cast<double>(fm.n_cols))));

  TrainedModel m;
  m.kind = ClassifierKind::rf;
  m.feature_names = fm.feature_names;
  m.threshold = 0.5;
  m.trees.resize(static_cast<std::size_t>(params.n_trees));

  std::vector<std::vector<std::uint8_t>> in_bag(
      m.trees.size(), std::vector<std::uint8_t>(fm.n_rows, 0));

  parallel_for(m.trees.size(), params.n_threads, [&](std::size_t t) {
    std::uint64_t tree_seed = derive_seed(seed, 0x54524545ULL, t);
    Rng boot(derive_seed(tree_seed, 1));
    std::vector<std::size_t> rows;
    rows.reserve(fm.n_rows);
    if (params.bootstrap) {
      for (std::size_t i = 0; i < fm.n_rows; ++i) {
        std::size_t r = boot.uniform_index(fm.n_rows);
        rows.push_back(r);
        in_bag[t][r] = 1;
      }
    } else {
      rows.resize(fm.n_rows);
      std::iota(rows.begin(), rows.end(), 0);
      std::fill(in_bag[t].begin(), in_bag[t].end(), std::uint8_t{1});
    }
    TreeBuilder builder(fm, params, mtry, derive_seed(tree_seed, 2));
    builder.build(rows, 0);
    m.trees[t] = std::move(builder.tree);
  });

  // Out-of-bag estimate: rows never bootstrapped into a tree vote through it.
  std::size_t voted = 0, correct = 0;
  for (std::size_t r = 0; r < fm.n_rows; ++r) {
    std::size_t votes_d = 0, votes = 0;
    for (std::size_t t = 0; t < m.trees.size(); ++t) {
      if (in_bag[t][r]) continue;
      ++votes;
      votes_d += m.trees[t].predict(&fm.values[r * fm.n_cols]) == Label::deception;
    }
    if (votes == 0) continue;
    ++voted;
    Label pred = 2 * votes_d > votes ? Label::deception : Label::truth;
    correct += pred == fm.labels[r];
  }
  m.oob_accuracy = voted == 0 ? std::numeric_limits<double>::quiet_NaN()
                              : static_cast<double>(correct) / static_cast<double>(voted);
  return m;
}

namespace {

// Maps matrix columns onto the model's feature order; identity when the
// matrix already has exactly the model's columns.
std::vector<std::size_t> column_map(const TrainedModel& m, const FeatureMatrix& fm) {
  std::vector<std::size_t> map(m.feature_names.size());
  if (fm.feature_names == m.feature_names) {
    std::iota(map.begin(), map.end(), 0);
    return map;
  }
  for (std::size_t i = 0; i < m.feature_names.size(); ++i) map[i] = fm.column_index(m.feature_names[i]);
  return map;
}

double score_row(const TrainedModel& m, const double* x) {
  switch (m.kind) {
    case ClassifierKind::trivial:
      return m.majority == Label::deception ? 1.0 : 0.0;
    case ClassifierKind::svm: {
      double s = m.bias;
      for (std::size_t i = 0; i < m.weights.size(); ++i) s += m.weights[i] * x[i];
      return s;
    }
    case ClassifierKind::rf: {
      std::size_t d = 0;
      for (const auto& tree : m.trees) d += tree.predict(x) == Label::deception;
      return static_cast<double>(d) / static_cast<double>(m.trees.size());
    }
    case ClassifierKind::sequence:
      break;
  }
  throw ValidationError("model kind has no row scorer");
}

}  // namespace

std::vector<double> predict_score(const TrainedModel& m, const FeatureMatrix& fm) {
  auto map = column_map(m, fm);
  std::vector<double> scores(fm.n_rows);
  std::vector<double> row(m.feature_names.size());
  for (std::size_t r = 0; r < fm.n_rows; ++r) {
    for (std::size_t i = 0; i < map.size(); ++i) row[i] = fm.at(r, map[i]);
    if (!m.scaler.empty()) m.scaler.apply_row(row.data(), row.size());
    scores[r] = score_row(m, row.data());
  }
  return scores;
}

std::vector<Label> predict(const TrainedModel& m, const FeatureMatrix& fm) {
  auto scores = predict_score(m, fm);
  std::vector<Label> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    out[i] = scores[i] > m.threshold ? Label::deception : Label::truth;
  return out;
}

nlohmann::ordered_json model_to_json(const TrainedModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "veridict-model";
  j["version"] = kModelFormatVersion;
  j["kind"] = to_string(m.kind);
  j["feature_names"] = m.feature_names;
  if (m.scaler.empty()) {
    j["scaler"] = nullptr;
  } else {
    j["scaler"] = {{"mean", m.scaler.mean}, {"std", m.scaler.std}};
  }
  j["threshold"] = m.threshold;
  switch (m.kind) {
    case ClassifierKind::trivial:
      j["trivial"] = {{"majority", to_string(m.majority)}};
      break;
    case ClassifierKind::svm:
      j["svm"] = {{"weights", m.weights}, {"bias", m.bias}};
      break;
    case ClassifierKind::rf: {
      nlohmann::ordered_json trees = nlohmann::ordered_json::array();
      for (const auto& tree : m.trees) {
        nlohmann::ordered_json tj;
        std::vector<int> feature, left, right;
        std::vector<double> threshold;
        std::vector<std::uint32_t> ct, cd;
        for (const auto& n : tree.nodes) {
          feature.push_back(n.feature);
          threshold.push_back(n.threshold);
          left.push_back(n.left);
          right.push_back(n.right);
          ct.push_back(n.count_truth);
          cd.push_back(n.count_deception);
        }
        tj["feature"] = feature;
        tj["threshold"] = threshold;
        tj["left"] = left;
        tj["right"] = right;
        tj["count_truth"] = ct;
        tj["count_deception"] = cd;
        trees.push_back(std::move(tj));
      }
      j["rf"] = {{"trees", std::move(trees)}};
      if (std::isnan(m.oob_accuracy))
        j["rf"]["oob_accuracy"] = nullptr;
      else
        j["rf"]["oob_accuracy"] = m.oob_accuracy;
      break;
    }
    case ClassifierKind::sequence:
      throw ValidationError("sequence models use their own serializer");
  }
  return j;
}

TrainedModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "veridict-model")
      throw ValidationError("not a model file");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw ValidationError("unsupported model format version");
    TrainedModel m;
    m.kind = parse_classifier(j.at("kind").get<std::string>());
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (!j.at("scaler").is_null()) {
      m.scaler.mean = j["scaler"].at("mean").get<std::vector<double>>();
      m.scaler.std = j["scaler"].at("std").get<std::vector<double>>();
      if (m.scaler.mean.size() != m.feature_names.size() ||
          m.scaler.std.size() != m.feature_names.size())
        throw ValidationError("scaler width does not match feature names");
    }
    m.threshold = j.at("threshold").get<double>();
    switch (m.kind) {
      case ClassifierKind::trivial:
        m.majority = parse_label(j.at("trivial").at("majority").get<std::string>());
        break;
      case ClassifierKind::svm:
        m.weights = j.at("svm").at("weights").get<std::vector<double>>();
        m.bias = j.at("svm").at("bias").get<double>();
        if (m.weights.size() != m.feature_names.size())
          throw ValidationError("weight vector width does not match feature names");
        break;
      case ClassifierKind::rf: {
        const auto& rf = j.at("rf");
        for (const auto& tj : rf.at("trees")) {
          DecisionTree tree;
          auto feature = tj.at("feature").get<std::vector<int>>();
          auto threshold = tj.at("threshold").get<std::vector<double>>();
          auto left = tj.at("left").get<std::vector<int>>();
          auto right = tj.at("right").get<std::vector<int>>();
          auto ct = tj.at("count_truth").get<std::vector<std::uint32_t>>();
          auto cd = tj.at("count_deception").get<std::vector<std::uint32_t>>();
          std::size_t n = feature.size();
          if (threshold.size() != n || left.size() != n || right.size() != n ||
              ct.size() != n || cd.size() != n)
            throw ValidationError("inconsistent tree arrays");
          for (std::size_t i = 0; i < n; ++i) {
            if (feature[i] >= static_cast<int>(m.feature_names.size()))
              throw ValidationError("tree split feature out of range");
            tree.nodes.push_back(
                {feature[i], threshold[i], left[i], right[i], ct[i], cd[i]});
          }
          m.trees.push_back(std::move(tree));
        }
        m.oob_accuracy = rf.at("oob_accuracy").is_null()
                             ? std::numeric_limits<double>::quiet_NaN()
                             : rf["oob_accuracy"].get<double>();
        break;
      }
      case ClassifierKind::sequence:
        throw ValidationError("sequence models use their own serializer");
    }
    return m;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const TrainedModel& m, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write model file " + file.string());
  out << model_to_json(m).dump(2) << "\n";
}

TrainedModel load_model(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open model file " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace veridict
