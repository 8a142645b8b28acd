#include "veridict/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "veridict/parallel.hpp"
#include "veridict/splits.hpp"
#include "veridict/textio.hpp"

namespace veridict {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

// ---------------------------------------------------------------------------
// Metrics

ConfusionMatrix confusion(std::span<const Label> labels, std::span<const Label> preds) {
  if (labels.size() != preds.size()) throw ValidationError("labels/predictions length mismatch");
  if (labels.empty()) throw ValidationError("cannot build a confusion matrix from no data");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    bool actual = labels[i] == Label::deception;
    bool pred = preds[i] == Label::deception;
    if (actual && pred) ++m.tp;
    else if (!actual && pred) ++m.fp;
    else if (actual && !pred) ++m.fn;
    else ++m.tn;
  }
  return m;
}

double accuracy(const ConfusionMatrix& m) {
  std::size_t n = m.total();
  if (n == 0) throw ValidationError("empty confusion matrix");
  return static_cast<double>(m.tp + m.tn) / static_cast<double>(n);
}

double f1(const ConfusionMatrix& m) {
  double precision = m.tp + m.fp == 0 ? 0.0
                                      : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  double recall = m.tp + m.fn == 0 ? 0.0
                                   : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double mcc(const ConfusionMatrix& m) {
  double tp = static_cast<double>(m.tp), fp = static_cast<double>(m.fp);
  double fn = static_cast<double>(m.fn), tn = static_cast<double>(m.tn);
  double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

RocResult roc_auc(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw ValidationError("scores/labels length mismatch");
  std::size_t pos = 0, neg = 0;
  for (Label l : labels) (l == Label::deception ? pos : neg)++;
  if (pos == 0 || neg == 0) throw ValidationError("roc needs both classes present");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult out;
  out.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  double auc = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    double s = scores[idx[i]];
    // Consume the whole tie group before emitting a point; the resulting
    // diagonal segment is what makes the trapezoid rule count ties as 1/2.
    while (i < idx.size() && scores[idx[i]] == s) {
      (labels[idx[i]] == Label::deception ? tp : fp)++;
      ++i;
    }
    double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    out.points.push_back({fpr, tpr, s});
    auc += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  out.auc = auc;
  return out;
}

double ccc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("ccc length mismatch");
  if (x.size() < 2) throw ValidationError("ccc needs at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cov += dx * dy;
  }
  vx /= n;
  vy /= n;
  cov /= n;
  double dm = mx - my;
  double denom = vx + vy + dm * dm;
  if (denom == 0.0) return 1.0;  // both constant with equal means
  return 2.0 * cov / denom;
}

LinearFit correlate(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("correlate length mismatch");
  if (x.size() < 2) throw ValidationError("correlate needs at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cov += dx * dy;
  }
  if (vx == 0.0) throw ValidationError("correlate: x is constant");
  LinearFit fit;
  fit.slope = cov / vx;
  fit.intercept = my - fit.slope * mx;
  fit.r = vy == 0.0 ? 0.0 : cov / std::sqrt(vx * vy);
  return fit;
}

// ---------------------------------------------------------------------------
// Pipeline

const char* to_string(SplitKind k) {
  switch (k) {
    case SplitKind::repeated_random: return "repeated-random";
    case SplitKind::leave_one_out: return "leave-one-out";
    case SplitKind::cross_dataset: return "cross-dataset";
    case SplitKind::resubstitution: return "resubstitution";
  }
  return "?";
}

SplitKind parse_split_kind(const std::string& s) {
  if (s == "repeated-random") return SplitKind::repeated_random;
  if (s == "leave-one-out") return SplitKind::leave_one_out;
  if (s == "cross-dataset") return SplitKind::cross_dataset;
  if (s == "resubstitution") return SplitKind::resubstitution;
  throw UsageError("unknown protocol '" + s + "'");
}

FittedPipeline fit_pipeline(const FeatureMatrix& fm, std::span<const std::size_t> train_rows,
                            const ClassifierSpec& clf, const SelectionSpec& sel,
                            std::uint64_t seed) {
  if (clf.kind == ClassifierKind::sequence)
    throw ValidationError("sequence models do not run through the feature pipeline");
  if (sel.pca_threshold != 0.0 && sel.fraction != 1.0)
    throw UsageError("feature selection and PCA are mutually exclusive");

  FittedPipeline p;
  FeatureMatrix train = fm.select_rows(train_rows);
  p.all_features = train.feature_names;
  std::vector<std::size_t> all(train.n_rows);
  std::iota(all.begin(), all.end(), 0);
  p.scaler = fit_scaler(train, all);
  FeatureMatrix train_std = apply_scaler(train, p.scaler);

  FeatureMatrix final_train;
  if (sel.pca_threshold != 0.0) {
    auto [reduced, state] = pca_reduce(train_std, sel.pca_threshold);
    p.used_pca = true;
    p.pca = std::move(state);
    final_train = std::move(reduced);
  } else if (sel.fraction < 1.0) {
    ImportanceConfig cfg;
    cfg.clf = sel.ranking_clf;
    cfg.svm = clf.svm;
    cfg.rf = clf.rf;
    cfg.n_repeats = sel.importance_repeats;
    cfg.n_threads = sel.n_threads;
    FeatureRanking ranking =
        permutation_importance(train_std, cfg, derive_seed(seed, 0x52414E4BULL));
    p.selected = select_top_fraction(ranking, sel.fraction);
    std::vector<std::size_t> cols;
    cols.reserve(p.selected.size());
    for (const auto& name : p.selected) cols.push_back(train_std.column_index(name));
    final_train = train_std.select_columns(cols);
  } else {
    final_train = std::move(train_std);
  }

  switch (clf.kind) {
    case ClassifierKind::trivial:
      p.model = fit_trivial(final_train);
      break;
    case ClassifierKind::svm:
      p.model = fit_svm(final_train, clf.svm, derive_seed(seed, 0x464954ULL));
      break;
    case ClassifierKind::rf:
      p.model = fit_rf(final_train, clf.rf, derive_seed(seed, 0x464954ULL));
      break;
    case ClassifierKind::sequence:
      break;  // unreachable, guarded above
  }
  return p;
}

std::vector<double> pipeline_scores(const FittedPipeline& p, const FeatureMatrix& fm,
                                    std::span<const std::size_t> rows) {
  FeatureMatrix sub = apply_scaler(fm.select_rows(rows), p.scaler);
  if (p.used_pca) {
    return predict_score(p.model, pca_apply(p.pca, sub));
  }
  if (!p.selected.empty()) {
    std::vector<std::size_t> cols;
    cols.reserve(p.selected.size());
    for (const auto& name : p.selected) cols.push_back(sub.column_index(name));
    return predict_score(p.model, sub.select_columns(cols));
  }
  return predict_score(p.model, sub);
}

double pipeline_threshold(const FittedPipeline& p) { return p.model.threshold; }

TrainedModel pipeline_to_model(const FittedPipeline& p) {
  if (p.used_pca)
    throw ValidationError("PCA pipelines cannot be exported to the model format");
  TrainedModel m = p.model;
  if (m.feature_names == p.all_features) {
    m.scaler = p.scaler;
    return m;
  }
  // Fold the full-width scaler down to the model's column subset.
  Scaler sub;
  sub.mean.reserve(m.feature_names.size());
  sub.std.reserve(m.feature_names.size());
  for (const auto& name : m.feature_names) {
    auto it = std::find(p.all_features.begin(), p.all_features.end(), name);
    if (it == p.all_features.end())
      throw ValidationError("pipeline scaler does not cover feature '" + name + "'");
    std::size_t c = static_cast<std::size_t>(it - p.all_features.begin());
    sub.mean.push_back(p.scaler.mean[c]);
    sub.std.push_back(p.scaler.std[c]);
  }
  m.scaler = std::move(sub);
  return m;
}

// ---------------------------------------------------------------------------
// Protocols

namespace {

Aggregate aggregate_of(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(),
                              [](double v) { return std::isnan(v); }),
               values.end());
  Aggregate a;
  if (values.empty()) {
    a.mean = a.median = a.stddev = kNaN;
    return a;
  }
  double n = static_cast<double>(values.size());
  for (double v : values) a.mean += v;
  a.mean /= n;
  std::sort(values.begin(), values.end());
  std::size_t h = values.size() / 2;
  a.median = values.size() % 2 ? values[h] : 0.5 * (values[h - 1] + values[h]);
  if (values.size() > 1) {
    double s = 0.0;
    for (double v : values) s += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(s / (n - 1.0));
  }
  return a;
}

struct SplitSet {
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> splits;
  int n_redraws = 0;
};

bool has_both_classes(const std::vector<Label>& labels, const std::vector<std::size_t>& rows) {
  bool t = false, d = false;
  for (std::size_t r : rows) (labels[r] == Label::truth ? t : d) = true;
  return t && d;
}

SplitSet make_splits(const SplitPlan& plan, const std::vector<Label>& labels) {
  if (plan.n_repeats < 1) throw ValidationError("n_repeats must be >= 1");
  SplitSet out;
  const std::size_t n = labels.size();
  switch (plan.kind) {
    case SplitKind::repeated_random: {
      for (int rep = 0; rep < plan.n_repeats; ++rep) {
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
          Rng rng(derive_seed(plan.seed, 0x53504C4954ULL, static_cast<std::uint64_t>(rep),
                              static_cast<std::uint64_t>(attempt)));
          auto [train, test] = random_split(labels, plan.train_fraction, plan.stratified, rng);
          if (test.empty()) throw ValidationError("test split has zero samples");
          if (train.empty() || !has_both_classes(labels, train)) {
            ++out.n_redraws;  // single-class train split: redraw with a new stream
            continue;
          }
          out.splits.emplace_back(std::move(train), std::move(test));
          ok = true;
        }
        if (!ok)
          throw ValidationError("could not draw a two-class training split in 100 attempts");
      }
      break;
    }
    case SplitKind::leave_one_out: {
      if (n < 2) throw ValidationError("leave-one-out needs at least 2 samples");
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> train, test{i};
        train.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
          if (j != i) train.push_back(j);
        out.splits.emplace_back(std::move(train), std::move(test));
      }
      break;
    }
    case SplitKind::resubstitution: {
      std::vector<std::size_t> all(n);
      std::iota(all.begin(), all.end(), 0);
      out.splits.emplace_back(all, all);
      break;
    }
    case SplitKind::cross_dataset:
      throw ValidationError("cross-dataset protocol takes two datasets");
  }
  return out;
}

std::string describe(const SplitPlan& plan) {
  std::string s = to_string(plan.kind);
  if (plan.kind == SplitKind::repeated_random) {
    s += " x" + std::to_string(plan.n_repeats) + " train_fraction=" +
         format_double(plan.train_fraction) + (plan.stratified ? " stratified" : " unstratified");
  }
  return s;
}

// Scores one evaluation repeat and folds it into the report.
void add_repeat(EvalReport& rep, int index, const std::vector<Label>& test_labels,
                const std::vector<double>& scores, double threshold, std::size_t n_train,
                std::vector<double>& pooled_scores, std::vector<Label>& pooled_labels) {
  std::vector<Label> preds(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    preds[i] = scores[i] > threshold ? Label::deception : Label::truth;

  RepeatMetrics m;
  m.repeat = index;
  m.n_train = n_train;
  m.n_test = test_labels.size();
  m.cm = confusion(test_labels, preds);
  m.accuracy = accuracy(m.cm);
  m.f1 = f1(m.cm);
  m.mcc = mcc(m.cm);
  bool both = false;
  {
    bool t = false, d = false;
    for (Label l : test_labels) (l == Label::truth ? t : d) = true;
    both = t && d;
  }
  m.auc = both ? roc_auc(scores, test_labels).auc : kNaN;
  std::vector<double> labels01(test_labels.size());
  for (std::size_t i = 0; i < test_labels.size(); ++i)
    labels01[i] = test_labels[i] == Label::deception ? 1.0 : 0.0;
  m.ccc = test_labels.size() >= 2 ? ccc(scores, labels01) : kNaN;

  rep.repeats.push_back(m);
  rep.confusion_total += m.cm;
  pooled_scores.insert(pooled_scores.end(), scores.begin(), scores.end());
  pooled_labels.insert(pooled_labels.end(), test_labels.begin(), test_labels.end());
}

void finalize_report(EvalReport& rep, const std::vector<double>& pooled_scores,
                     const std::vector<Label>& pooled_labels) {
  auto collect = [&](auto getter) {
    std::vector<double> v;
    v.reserve(rep.repeats.size());
    for (const auto& m : rep.repeats) v.push_back(getter(m));
    return v;
  };
  rep.accuracy = aggregate_of(collect([](const RepeatMetrics& m) { return m.accuracy; }));
  rep.f1 = aggregate_of(collect([](const RepeatMetrics& m) { return m.f1; }));
  rep.mcc = aggregate_of(collect([](const RepeatMetrics& m) { return m.mcc; }));
  rep.auc = aggregate_of(collect([](const RepeatMetrics& m) { return m.auc; }));
  rep.ccc = aggregate_of(collect([](const RepeatMetrics& m) { return m.ccc; }));

  bool t = false, d = false;
  for (Label l : pooled_labels) (l == Label::truth ? t : d) = true;
  if (t && d) {
    RocResult roc = roc_auc(pooled_scores, pooled_labels);
    rep.roc = std::move(roc.points);
    rep.pooled_auc = roc.auc;
  } else {
    rep.pooled_auc = kNaN;
  }
}

std::vector<Label> labels_of(const Dataset& ds) {
  std::vector<Label> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) out.push_back(s.label);
  return out;
}

}  // namespace

EvalReport run_protocol(const FeatureMatrix& fm, const SplitPlan& plan, const ClassifierSpec& clf,
                        const SelectionSpec& sel) {
  if (clf.kind == ClassifierKind::sequence)
    throw ValidationError("sequence protocols need the dataset entry point");
  SplitSet ss = make_splits(plan, fm.labels);

  EvalReport rep;
  rep.protocol = describe(plan);
  rep.classifier = to_string(clf.kind);
  rep.n_redraws = ss.n_redraws;

  // Heavy work runs in parallel into per-repeat slots; metric folding stays
  // serial so the report is identical at any thread count.
  std::vector<std::vector<double>> scores_of(ss.splits.size());
  std::vector<double> threshold_of(ss.splits.size());
  parallel_for(ss.splits.size(), plan.n_threads, [&](std::size_t i) {
    const auto& [train, test] = ss.splits[i];
    std::uint64_t seed_r = derive_seed(plan.seed, 0x52455045ULL, i);
    FittedPipeline pipe = fit_pipeline(fm, train, clf, sel, seed_r);
    scores_of[i] = pipeline_scores(pipe, fm, test);
    threshold_of[i] = pipe.model.threshold;
  });

  std::vector<double> pooled_scores;
  std::vector<Label> pooled_labels;
  for (std::size_t i = 0; i < ss.splits.size(); ++i) {
    const auto& [train, test] = ss.splits[i];
    std::vector<Label> test_labels;
    test_labels.reserve(test.size());
    for (std::size_t r : test) test_labels.push_back(fm.labels[r]);
    add_repeat(rep, static_cast<int>(i), test_labels, scores_of[i], threshold_of[i], train.size(),
               pooled_scores, pooled_labels);
  }
  finalize_report(rep, pooled_scores, pooled_labels);
  return rep;
}

EvalReport run_protocol(const Dataset& ds, const StatSet& stats, const FeatureSchema& schema,
                        const SplitPlan& plan, const ClassifierSpec& clf,
                        const SelectionSpec& sel) {
  if (clf.kind != ClassifierKind::sequence)
    return run_protocol(build_feature_matrix(ds, stats, schema), plan, clf, sel);

  std::vector<Label> labels = labels_of(ds);
  SplitSet ss = make_splits(plan, labels);

  EvalReport rep;
  rep.protocol = describe(plan);
  rep.classifier = "sequence";
  rep.n_redraws = ss.n_redraws;

  std::vector<std::vector<double>> scores_of(ss.splits.size());
  parallel_for(ss.splits.size(), plan.n_threads, [&](std::size_t i) {
    const auto& [train, test] = ss.splits[i];
    std::vector<Sample> train_samples, test_samples;
    for (std::size_t r : train) train_samples.push_back(ds.samples[r]);
    for (std::size_t r : test) test_samples.push_back(ds.samples[r]);

    SequenceScaler scaler = fit_sequence_scaler(train_samples, clf.seq_len, schema);
    SequenceBatch train_b = make_batch(train_samples, clf.seq_len, schema, &scaler);
    SequenceBatch test_b = make_batch(test_samples, clf.seq_len, schema, &scaler);

    SeqTrainConfig cfg = clf.seq;
    cfg.seed = derive_seed(plan.seed, 0x52455045ULL, i);
    SeqTrainResult res = train_sequence(train_b, test_b, cfg);
    scores_of[i] = seq_forward(res.net, test_b);
  });

  std::vector<double> pooled_scores;
  std::vector<Label> pooled_labels;
  for (std::size_t i = 0; i < ss.splits.size(); ++i) {
    const auto& [train, test] = ss.splits[i];
    std::vector<Label> test_labels;
    test_labels.reserve(test.size());
    for (std::size_t r : test) test_labels.push_back(labels[r]);
    add_repeat(rep, static_cast<int>(i), test_labels, scores_of[i], 0.5, train.size(),
               pooled_scores, pooled_labels);
  }
  finalize_report(rep, pooled_scores, pooled_labels);
  return rep;
}

EvalReport run_cross_dataset(const FeatureMatrix& train_fm, const FeatureMatrix& test_fm,
                             const ClassifierSpec& clf, const SelectionSpec& sel,
                             std::uint64_t seed) {
  if (train_fm.feature_names != test_fm.feature_names)
    throw ValidationError("cross-dataset feature columns do not match");
  std::vector<std::size_t> train_rows(train_fm.n_rows), test_rows(test_fm.n_rows);
  std::iota(train_rows.begin(), train_rows.end(), 0);
  std::iota(test_rows.begin(), test_rows.end(), 0);

  EvalReport rep;
  rep.protocol = "cross-dataset";
  rep.classifier = to_string(clf.kind);
  std::vector<double> pooled_scores;
  std::vector<Label> pooled_labels;

  FittedPipeline pipe = fit_pipeline(train_fm, train_rows, clf, sel, seed);
  std::vector<double> scores = pipeline_scores(pipe, test_fm, test_rows);
  add_repeat(rep, 0, test_fm.labels, scores, pipe.model.threshold, train_fm.n_rows,
             pooled_scores, pooled_labels);
  finalize_report(rep, pooled_scores, pooled_labels);
  return rep;
}

EvalReport run_cross_dataset(const Dataset& train_ds, const Dataset& test_ds,
                             const StatSet& stats, const FeatureSchema& schema,
                             const ClassifierSpec& clf, const SelectionSpec& sel,
                             std::uint64_t seed) {
  if (clf.kind != ClassifierKind::sequence) {
    return run_cross_dataset(build_feature_matrix(train_ds, stats, schema),
                             build_feature_matrix(test_ds, stats, schema), clf, sel, seed);
  }
  EvalReport rep;
  rep.protocol = "cross-dataset";
  rep.classifier = "sequence";
  std::vector<double> pooled_scores;
  std::vector<Label> pooled_labels;

  SequenceScaler scaler = fit_sequence_scaler(train_ds.samples, clf.seq_len, schema);
  SequenceBatch train_b = make_batch(train_ds.samples, clf.seq_len, schema, &scaler);
  SequenceBatch test_b = make_batch(test_ds.samples, clf.seq_len, schema, &scaler);
  SeqTrainConfig cfg = clf.seq;
  cfg.seed = derive_seed(seed, 0x52455045ULL);
  SeqTrainResult res = train_sequence(train_b, test_b, cfg);
  std::vector<double> scores = seq_forward(res.net, test_b);
  add_repeat(rep, 0, labels_of(test_ds), scores, 0.5, train_ds.samples.size(), pooled_scores,
             pooled_labels);
  finalize_report(rep, pooled_scores, pooled_labels);
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::ordered_json aggregate_json(const Aggregate& a) {
  nlohmann::ordered_json j;
  j["mean"] = a.mean;
  j["median"] = a.median;
  j["std"] = a.stddev;
  return j;
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["protocol"] = r.protocol;
  j["classifier"] = r.classifier;
  j["n_repeats"] = r.repeats.size();
  j["n_redraws"] = r.n_redraws;
  j["aggregates"] = {{"accuracy", aggregate_json(r.accuracy)},
                     {"f1", aggregate_json(r.f1)},
                     {"mcc", aggregate_json(r.mcc)},
                     {"auc", aggregate_json(r.auc)},
                     {"ccc", aggregate_json(r.ccc)}};
  j["confusion_total"] = {{"tp", r.confusion_total.tp},
                          {"fp", r.confusion_total.fp},
                          {"fn", r.confusion_total.fn},
                          {"tn", r.confusion_total.tn}};
  j["pooled_auc"] = r.pooled_auc;
  nlohmann::ordered_json reps = nlohmann::ordered_json::array();
  for (const auto& m : r.repeats) {
    nlohmann::ordered_json mj;
    mj["repeat"] = m.repeat;
    mj["n_train"] = m.n_train;
    mj["n_test"] = m.n_test;
    mj["accuracy"] = m.accuracy;
    mj["f1"] = m.f1;
    mj["mcc"] = m.mcc;
    mj["auc"] = m.auc;
    mj["ccc"] = m.ccc;
    mj["confusion"] = {{"tp", m.cm.tp}, {"fp", m.cm.fp}, {"fn", m.cm.fn}, {"tn", m.cm.tn}};
    reps.push_back(std::move(mj));
  }
  j["repeats"] = std::move(reps);
  nlohmann::ordered_json roc = nlohmann::ordered_json::array();
  for (const auto& p : r.roc) roc.push_back({p.fpr, p.tpr, p.threshold});
  j["roc"] = std::move(roc);
  return j;
}

void write_roc_csv(std::span<const RocPoint> points, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file.string());
  out << "fpr,tpr,threshold\n";
  for (const auto& p : points)
    out << format_double(p.fpr) << "," << format_double(p.tpr) << ","
        << format_double(p.threshold) << "\n";
}

}  // namespace veridict
