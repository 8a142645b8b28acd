#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "veridict/evaluation.hpp"
#include "veridict/rng.hpp"

using namespace veridict;

namespace {

FeatureMatrix make_matrix(const std::vector<std::vector<double>>& rows,
                          const std::vector<Label>& labels, std::vector<std::string> names) {
  FeatureMatrix fm;
  fm.n_rows = rows.size();
  fm.n_cols = names.size();
  fm.feature_names = std::move(names);
  fm.feature_modalities.assign(fm.n_cols, "manual");
  fm.labels = labels;
  for (std::size_t r = 0; r < fm.n_rows; ++r) {
    fm.sample_ids.push_back("s" + std::to_string(r));
    fm.dataset_ids.push_back("unit");
    fm.values.insert(fm.values.end(), rows[r].begin(), rows[r].end());
  }
  return fm;
}

// Separable 2-feature blobs plus optional pure-noise columns.
FeatureMatrix make_blobs(std::size_t n, Rng& rng, std::size_t n_noise = 0,
                         const std::string& dataset = "unit") {
  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  std::vector<std::string> names{"sig0", "sig1"};
  for (std::size_t j = 0; j < n_noise; ++j) names.push_back("noise" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) {
    bool dec = i % 2 == 1;
    double cx = dec ? 2.0 : -2.0;
    std::vector<double> row{rng.normal(cx, 0.5), rng.normal(cx, 0.5)};
    for (std::size_t j = 0; j < n_noise; ++j) row.push_back(rng.normal());
    rows.push_back(std::move(row));
    labels.push_back(dec ? Label::deception : Label::truth);
  }
  FeatureMatrix fm = make_matrix(rows, labels, names);
  for (auto& d : fm.dataset_ids) d = dataset;
  return fm;
}

std::vector<Label> label_vector(std::size_t n_truth, std::size_t n_deception) {
  std::vector<Label> v(n_truth, Label::truth);
  v.insert(v.end(), n_deception, Label::deception);
  return v;
}

// Brute-force Mann-Whitney statistic: P(score_dec > score_truth) + ties/2.
double mann_whitney(const std::vector<double>& scores, const std::vector<Label>& labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != Label::deception) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != Label::truth) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("confusion counting and the derived point metrics") {
  // 3 hits, 1 false alarm, 2 misses, 4 correct rejections.
  std::vector<Label> labels{Label::deception, Label::deception, Label::deception,
                            Label::deception, Label::deception, Label::truth,
                            Label::truth,     Label::truth,     Label::truth,
                            Label::truth};
  std::vector<Label> preds{Label::deception, Label::deception, Label::deception,
                           Label::truth,     Label::truth,     Label::deception,
                           Label::truth,     Label::truth,     Label::truth,
                           Label::truth};
  ConfusionMatrix cm = confusion(labels, preds);
  CHECK(cm.tp == 3);
  CHECK(cm.fn == 2);
  CHECK(cm.fp == 1);
  CHECK(cm.tn == 4);
  CHECK(cm.total() == 10);
  CHECK(accuracy(cm) == 0.7);
  CHECK(f1(cm) == doctest::Approx(2.0 * 3 / (2.0 * 3 + 1 + 2)).epsilon(1e-15));
  CHECK(mcc(cm) == doctest::Approx(10.0 / std::sqrt(600.0)).epsilon(1e-15));

  std::vector<Label> shorter{Label::truth};
  CHECK_THROWS_AS(confusion(labels, shorter), ValidationError);
  std::vector<Label> empty;
  CHECK_THROWS_AS(confusion(empty, empty), ValidationError);
  CHECK_THROWS_AS(accuracy(ConfusionMatrix{}), ValidationError);
}

TEST_CASE("degenerate all-majority predictions zero out f1 and mcc") {
  std::vector<Label> labels = label_vector(321, 179);
  std::vector<Label> preds(500, Label::truth);
  ConfusionMatrix cm = confusion(labels, preds);
  CHECK(accuracy(cm) == 0.642);  // exactly 321/500
  CHECK(f1(cm) == 0.0);
  CHECK(mcc(cm) == 0.0);
}

TEST_CASE("concordance correlation closed forms") {
  std::vector<double> x{1.0, 2.0, 3.0};
  std::vector<double> y{2.0, 3.0, 4.0};
  CHECK(ccc(x, y) == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
  CHECK(ccc(x, x) == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<double> c1{2.0, 2.0};
  std::vector<double> c2{2.0, 2.0};
  CHECK(ccc(c1, c2) == 1.0);  // identical constants agree perfectly
  std::vector<double> c3{3.0, 3.0};
  CHECK(ccc(c1, c3) == 0.0);  // distinct constants cannot covary

  std::vector<double> one{1.0};
  CHECK_THROWS_AS(ccc(one, one), ValidationError);
  CHECK_THROWS_AS(ccc(x, c1), ValidationError);
}

TEST_CASE("pearson correlation and least squares line") {
  std::vector<double> x{0.0, 1.0, 2.0, 3.0, 4.0};
  std::vector<double> y;
  for (double v : x) y.push_back(2.0 * v + 1.0);
  LinearFit fit = correlate(x, y);
  CHECK(fit.r == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> flat(5, 3.5);
  CHECK_THROWS_AS(correlate(flat, y), ValidationError);
  LinearFit fy = correlate(x, flat);
  CHECK(fy.r == 0.0);
  CHECK(fy.slope == 0.0);
  CHECK(fy.intercept == 3.5);

  std::vector<double> one{1.0};
  CHECK_THROWS_AS(correlate(one, one), ValidationError);
}

TEST_CASE("roc endpoints, monotonicity, and the perfect/reversed cases") {
  std::vector<double> scores{0.9, 0.8, 0.2, 0.1};
  std::vector<Label> labels{Label::deception, Label::deception, Label::truth, Label::truth};
  RocResult roc = roc_auc(scores, labels);
  CHECK(roc.auc == 1.0);
  REQUIRE(!roc.points.empty());
  CHECK(roc.points.front().fpr == 0.0);
  CHECK(roc.points.front().tpr == 0.0);
  CHECK(std::isinf(roc.points.front().threshold));
  CHECK(roc.points.back().fpr == 1.0);
  CHECK(roc.points.back().tpr == 1.0);
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    CHECK(roc.points[i].fpr >= roc.points[i - 1].fpr);
    CHECK(roc.points[i].tpr >= roc.points[i - 1].tpr);
  }

  std::vector<Label> reversed{Label::truth, Label::truth, Label::deception, Label::deception};
  CHECK(roc_auc(scores, reversed).auc == 0.0);

  std::vector<Label> one_class(4, Label::truth);
  CHECK_THROWS_AS(roc_auc(scores, one_class), ValidationError);
  std::vector<double> shorter{0.1};
  CHECK_THROWS_AS(roc_auc(shorter, labels), ValidationError);
}

TEST_CASE("trapezoidal auc equals the brute-force pair statistic, ties included") {
  Rng rng(701);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t n = 10 + rng.uniform_index(40);
    std::vector<double> scores(n);
    std::vector<Label> labels(n);
    bool has_t = false, has_d = false;
    for (std::size_t i = 0; i < n; ++i) {
      // Snap to a coarse grid so tied scores are common.
      scores[i] = std::round(rng.uniform() * 10.0) / 10.0;
      labels[i] = rng.uniform() < 0.5 ? Label::truth : Label::deception;
      (labels[i] == Label::truth ? has_t : has_d) = true;
    }
    if (!has_t || !has_d) continue;
    double trap = roc_auc(scores, labels).auc;
    CHECK(std::abs(trap - mann_whitney(scores, labels)) <= 1e-12);
  }
}

TEST_CASE("random scores score near one half on balanced labels") {
  Rng rng(702);
  const std::size_t n = 10000;
  std::vector<double> scores(n);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = i % 2 ? Label::deception : Label::truth;
  }
  double auc = roc_auc(scores, labels).auc;
  CHECK(auc > 0.47);
  CHECK(auc < 0.53);
}

TEST_CASE("auc is invariant under strictly increasing score transforms") {
  Rng rng(703);
  std::vector<double> scores(200);
  std::vector<Label> labels(200);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = std::round(rng.normal() * 5.0) / 5.0;
    labels[i] = rng.uniform() < 0.4 ? Label::deception : Label::truth;
  }
  std::vector<double> warped;
  for (double s : scores) warped.push_back(std::exp(s));
  RocResult a = roc_auc(scores, labels);
  RocResult b = roc_auc(warped, labels);
  CHECK(a.auc == b.auc);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].fpr == b.points[i].fpr);
    CHECK(a.points[i].tpr == b.points[i].tpr);
  }
}

TEST_CASE("protocol names round trip") {
  CHECK(parse_split_kind("repeated-random") == SplitKind::repeated_random);
  CHECK(parse_split_kind("leave-one-out") == SplitKind::leave_one_out);
  CHECK(parse_split_kind("cross-dataset") == SplitKind::cross_dataset);
  CHECK(parse_split_kind("resubstitution") == SplitKind::resubstitution);
  CHECK(std::string(to_string(SplitKind::leave_one_out)) == "leave-one-out");
  CHECK_THROWS_AS(parse_split_kind("kfold"), UsageError);
}

TEST_CASE("resubstitution with the trivial baseline hits exact prevalences") {
  struct Case {
    std::size_t n_truth, n_dec;
    double expect;
  };
  // Each expectation is an exact IEEE quotient of small integers.
  for (const Case& c : {Case{321, 179, 0.642}, Case{2903, 2097, 0.5806},
                        Case{129, 121, 0.516}, Case{250, 250, 0.50}}) {
    std::size_t n = c.n_truth + c.n_dec;
    std::vector<std::vector<double>> rows(n, std::vector<double>{0.0});
    FeatureMatrix fm = make_matrix(rows, label_vector(c.n_truth, c.n_dec), {"x"});
    SplitPlan plan;
    plan.kind = SplitKind::resubstitution;
    ClassifierSpec clf;
    clf.kind = ClassifierKind::trivial;
    EvalReport r = run_protocol(fm, plan, clf, SelectionSpec{});
    REQUIRE(r.repeats.size() == 1);
    CHECK(r.repeats[0].n_train == n);
    CHECK(r.repeats[0].n_test == n);
    CHECK(r.accuracy.mean == c.expect);
    CHECK(r.accuracy.median == c.expect);
    CHECK(r.f1.mean == 0.0);  // all-majority: no true positives
    CHECK(r.mcc.mean == 0.0);
    CHECK(r.confusion_total.total() == n);
    CHECK(r.protocol == "resubstitution");
    CHECK(r.classifier == "trivial");
  }
}

TEST_CASE("pipeline guards: sequence kind and selection/pca exclusivity") {
  Rng rng(704);
  FeatureMatrix fm = make_blobs(30, rng);
  std::vector<std::size_t> train(20);
  std::iota(train.begin(), train.end(), 0);

  ClassifierSpec seq_clf;
  seq_clf.kind = ClassifierKind::sequence;
  CHECK_THROWS_AS(fit_pipeline(fm, train, seq_clf, SelectionSpec{}, 0), ValidationError);

  ClassifierSpec svm_clf;
  SelectionSpec both;
  both.fraction = 0.5;
  both.pca_threshold = 0.9;
  CHECK_THROWS_AS(fit_pipeline(fm, train, svm_clf, both, 0), UsageError);
}

TEST_CASE("nothing outside the training rows influences the fitted pipeline") {
  Rng rng(705);
  FeatureMatrix fm = make_blobs(60, rng, 3);
  std::vector<std::size_t> train(40);
  std::iota(train.begin(), train.end(), 0);

  // Vandalize every held-out row: labels flipped, values rescaled and shifted.
  FeatureMatrix corrupt = fm;
  for (std::size_t r = 40; r < 60; ++r) {
    corrupt.labels[r] = corrupt.labels[r] == Label::truth ? Label::deception : Label::truth;
    for (std::size_t c = 0; c < corrupt.n_cols; ++c)
      corrupt.at(r, c) = corrupt.at(r, c) * 3.7 + 11.0;
  }

  ClassifierSpec clf;
  SelectionSpec sel;
  sel.fraction = 0.5;
  FittedPipeline a = fit_pipeline(fm, train, clf, sel, 42);
  FittedPipeline b = fit_pipeline(corrupt, train, clf, sel, 42);
  CHECK(a.selected == b.selected);
  CHECK(a.scaler.mean == b.scaler.mean);
  CHECK(a.scaler.std == b.scaler.std);
  CHECK(a.model.weights == b.model.weights);
  CHECK(a.model.bias == b.model.bias);
  CHECK(pipeline_scores(a, fm, train) == pipeline_scores(b, fm, train));
}

TEST_CASE("selection pipelines export to standalone models with equal scores") {
  Rng rng(706);
  FeatureMatrix fm = make_blobs(50, rng, 3);
  std::vector<std::size_t> train(35), test(15);
  std::iota(train.begin(), train.end(), 0);
  std::iota(test.begin(), test.end(), 35);

  ClassifierSpec clf;
  SelectionSpec sel;
  sel.fraction = 0.4;  // ceil(0.4 * 5) = 2 of 5 columns
  FittedPipeline pipe = fit_pipeline(fm, train, clf, sel, 7);
  CHECK(pipe.selected.size() == 2);
  CHECK(pipeline_threshold(pipe) == 0.0);

  TrainedModel portable = pipeline_to_model(pipe);
  CHECK(portable.feature_names == pipe.selected);
  auto direct = pipeline_scores(pipe, fm, test);
  auto via_model = predict_score(portable, fm.select_rows(test));
  CHECK(direct == via_model);

  SelectionSpec pca;
  pca.pca_threshold = 0.95;
  FittedPipeline ppca = fit_pipeline(fm, train, clf, pca, 7);
  CHECK(ppca.used_pca);
  CHECK_THROWS_AS(pipeline_to_model(ppca), ValidationError);
  // But the PCA pipeline itself scores held-out rows fine.
  auto pca_scores = pipeline_scores(ppca, fm, test);
  CHECK(pca_scores.size() == test.size());
}

TEST_CASE("repeated random protocol: determinism, threads, and aggregates") {
  Rng rng(707);
  FeatureMatrix fm = make_blobs(80, rng);
  SplitPlan plan;
  plan.n_repeats = 12;
  plan.seed = 5;
  ClassifierSpec clf;

  EvalReport r1 = run_protocol(fm, plan, clf, SelectionSpec{});
  EvalReport r2 = run_protocol(fm, plan, clf, SelectionSpec{});
  SplitPlan par = plan;
  par.n_threads = 4;
  EvalReport r3 = run_protocol(fm, par, clf, SelectionSpec{});

  REQUIRE(r1.repeats.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(r1.repeats[i].accuracy == r2.repeats[i].accuracy);
    CHECK(r1.repeats[i].accuracy == r3.repeats[i].accuracy);
    CHECK(r1.repeats[i].auc == r3.repeats[i].auc);
    CHECK(r1.repeats[i].repeat == static_cast<int>(i));
  }
  CHECK(r1.accuracy.mean == r3.accuracy.mean);
  CHECK(r1.pooled_auc == r3.pooled_auc);

  // Separable blobs score 1.0 on every split, so probe seed sensitivity on an
  // overlapping cloud where per-repeat accuracy depends on the draw.
  FeatureMatrix noisy = make_blobs(80, rng);
  for (std::size_t i = 0; i < noisy.values.size(); ++i) noisy.values[i] += rng.normal(0.0, 2.5);
  EvalReport n1 = run_protocol(noisy, plan, clf, SelectionSpec{});
  SplitPlan other = plan;
  other.seed = 6;
  EvalReport n2 = run_protocol(noisy, other, clf, SelectionSpec{});
  bool any_diff = false;
  for (std::size_t i = 0; i < 12; ++i)
    any_diff = any_diff || n1.repeats[i].accuracy != n2.repeats[i].accuracy ||
               n1.repeats[i].auc != n2.repeats[i].auc;
  CHECK(any_diff);

  // Aggregates are plain NaN-skipping summaries of the per-repeat metrics.
  std::vector<double> f1s;
  for (const auto& m : r1.repeats) f1s.push_back(m.f1);
  double mean = 0.0;
  for (double v : f1s) mean += v;
  mean /= static_cast<double>(f1s.size());
  CHECK(r1.f1.mean == doctest::Approx(mean).epsilon(1e-12));
  std::sort(f1s.begin(), f1s.end());
  CHECK(r1.f1.median == doctest::Approx(0.5 * (f1s[5] + f1s[6])).epsilon(1e-12));

  std::size_t pooled = 0;
  for (const auto& m : r1.repeats) pooled += m.n_test;
  CHECK(r1.confusion_total.total() == pooled);
  CHECK(r1.protocol.find("repeated-random x12") == 0);
  CHECK(r1.protocol.find("stratified") != std::string::npos);
  CHECK(r1.classifier == "svm");
  CHECK(r1.n_redraws == 0);
  CHECK(r1.accuracy.mean >= 0.95);  // separable blobs
}

TEST_CASE("single-class training draws are redrawn and counted") {
  std::vector<std::vector<double>> rows(10, std::vector<double>{1.0});
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i][0] = static_cast<double>(i);
  FeatureMatrix fm = make_matrix(rows, label_vector(9, 1), {"x"});

  SplitPlan plan;
  plan.n_repeats = 40;
  plan.train_fraction = 0.5;
  plan.stratified = false;
  plan.seed = 2;
  ClassifierSpec clf;
  clf.kind = ClassifierKind::trivial;
  EvalReport r = run_protocol(fm, plan, clf, SelectionSpec{});
  CHECK(r.n_redraws >= 1);
  for (const auto& m : r.repeats) {
    CHECK(m.n_train == 5);
    CHECK(m.n_test == 5);
  }

  // Two samples can never yield a two-class half split: hard error.
  FeatureMatrix tiny = make_matrix({{0.0}, {1.0}}, label_vector(1, 1), {"x"});
  CHECK_THROWS_AS(run_protocol(tiny, plan, clf, SelectionSpec{}), ValidationError);
}

TEST_CASE("leave-one-out: one repeat per sample, aggregate auc undefined") {
  Rng rng(708);
  FeatureMatrix fm = make_blobs(12, rng);
  SplitPlan plan;
  plan.kind = SplitKind::leave_one_out;
  ClassifierSpec clf;
  EvalReport r = run_protocol(fm, plan, clf, SelectionSpec{});
  REQUIRE(r.repeats.size() == 12);
  for (const auto& m : r.repeats) {
    CHECK(m.n_test == 1);
    CHECK(m.n_train == 11);
    CHECK(std::isnan(m.auc));  // a one-sample test split holds one class
  }
  CHECK(std::isnan(r.auc.mean));
  CHECK(r.confusion_total.total() == 12);
  CHECK(r.pooled_auc >= 0.9);  // pooling restores both classes
  CHECK(r.accuracy.mean >= 0.9);

  FeatureMatrix single = make_matrix({{0.0}}, {Label::truth}, {"x"});
  CHECK_THROWS_AS(run_protocol(single, plan, clf, SelectionSpec{}), ValidationError);
}

TEST_CASE("cross-dataset transfer uses its own entry point") {
  Rng rng(709);
  FeatureMatrix a = make_blobs(60, rng, 0, "corpus_a");
  FeatureMatrix b = make_blobs(40, rng, 0, "corpus_b");

  SplitPlan plan;
  plan.kind = SplitKind::cross_dataset;
  ClassifierSpec clf;
  CHECK_THROWS_AS(run_protocol(a, plan, clf, SelectionSpec{}), ValidationError);

  EvalReport r = run_cross_dataset(a, b, clf, SelectionSpec{}, 0);
  REQUIRE(r.repeats.size() == 1);
  CHECK(r.protocol == "cross-dataset");
  CHECK(r.repeats[0].n_train == 60);
  CHECK(r.repeats[0].n_test == 40);
  CHECK(r.accuracy.mean >= 0.9);  // same generating process transfers

  FeatureMatrix c = b;
  c.feature_names[1] = "renamed";
  CHECK_THROWS_AS(run_cross_dataset(a, c, clf, SelectionSpec{}, 0), ValidationError);
}

TEST_CASE("sequence classifiers run through the dataset protocol") {
  SynthConfig cfg;
  cfg.n_samples = 16;
  cfg.frames_per_sample = 16;
  cfg.effect_mu_deg = 25.0;
  Dataset ds = generate_synthetic(cfg, 31);

  SplitPlan plan;
  plan.n_repeats = 2;
  plan.seed = 1;
  ClassifierSpec clf;
  clf.kind = ClassifierKind::sequence;
  clf.seq.epochs = 8;
  clf.seq.hidden = 4;
  clf.seq_len = 10;

  EvalReport r = run_protocol(ds, StatSet::all(), FeatureSchema{}, plan, clf, SelectionSpec{});
  REQUIRE(r.repeats.size() == 2);
  CHECK(r.classifier == "sequence");
  for (const auto& m : r.repeats) {
    CHECK(m.accuracy >= 0.0);
    CHECK(m.accuracy <= 1.0);
  }

  // The matrix entry point cannot serve sequence models.
  Rng rng(710);
  FeatureMatrix fm = make_blobs(10, rng);
  SplitPlan rr;
  CHECK_THROWS_AS(run_protocol(fm, rr, clf, SelectionSpec{}), ValidationError);
}

TEST_CASE("report json carries the documented fields") {
  Rng rng(711);
  FeatureMatrix fm = make_blobs(30, rng);
  SplitPlan plan;
  plan.n_repeats = 4;
  ClassifierSpec clf;
  EvalReport r = run_protocol(fm, plan, clf, SelectionSpec{});
  nlohmann::ordered_json j = report_to_json(r);
  CHECK(j.at("protocol").get<std::string>() == r.protocol);
  CHECK(j.at("classifier").get<std::string>() == "svm");
  CHECK(j.at("n_repeats").get<int>() == 4);
  CHECK(j.at("repeats").size() == 4);
  CHECK(j.at("aggregates").at("accuracy").at("mean").get<double>() == r.accuracy.mean);
  CHECK(j.at("confusion_total").at("tp").get<std::size_t>() == r.confusion_total.tp);
  CHECK(j.at("pooled_auc").get<double>() == r.pooled_auc);
  CHECK(j.at("roc").size() == r.roc.size());
}
