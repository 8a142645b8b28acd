#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "veridict/features.hpp"
#include "veridict/rng.hpp"

using namespace veridict;

namespace {

// Naive re-derivations used as oracles against the streaming implementation.
double naive_mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double naive_moment(const std::vector<double>& x, int k) {
  double mu = naive_mean(x), s = 0.0;
  for (double v : x) s += std::pow(v - mu, k);
  return s / static_cast<double>(x.size());
}

double naive_median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  std::size_t h = x.size() / 2;
  return x.size() % 2 ? x[h] : 0.5 * (x[h - 1] + x[h]);
}

Sample make_sample(const std::string& id, Label label,
                   const std::vector<std::vector<double>>& head_yaw_etc,
                   const FeatureSchema& schema) {
  // head_yaw_etc[t] = {gaze_yaw, gaze_pitch, head_yaw}; the rest is constant.
  Sample s;
  s.sample_id = id;
  s.subject_id = "subj_" + id;
  s.dataset_id = "unit";
  s.label = label;
  s.fps = 30.0;
  s.au_names = schema.au_names;
  for (const auto& row : head_yaw_etc) {
    FrameFeatures f;
    f.gaze_yaw = row[0];
    f.gaze_pitch = row[1];
    f.head_yaw = row[2];
    f.au.assign(schema.au_names.size(), 0.5);
    f.emotion_probs = {0.3, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
    f.valence = 0.25;
    f.arousal = -0.25;
    s.frames.push_back(std::move(f));
  }
  return s;
}

}  // namespace

TEST_CASE("summary statistics match hand arithmetic") {
  StatSet all = StatSet::all();
  std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  auto s = summarize_series(x, all);
  CHECK(s.at(Stat::mean) == 2.5);
  CHECK(s.at(Stat::stddev) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK(s.at(Stat::min) == 1.0);
  CHECK(s.at(Stat::max) == 4.0);
  CHECK(s.at(Stat::median) == 2.5);
  CHECK(s.at(Stat::skewness) == 0.0);

  std::vector<double> odd{10.0, 1.0, 2.0};
  CHECK(summarize_series(odd, all).at(Stat::median) == 2.0);

  // A 1-in-4 indicator is an exact Bernoulli(0.25) population:
  // skew = (1-2p)/sqrt(pq), excess kurtosis = (1-6pq)/(pq).
  std::vector<double> bern{1.0, 0.0, 0.0, 0.0};
  auto sb = summarize_series(bern, all);
  double p = 0.25, q = 0.75;
  CHECK(sb.at(Stat::skewness) == doctest::Approx((1 - 2 * p) / std::sqrt(p * q)).epsilon(1e-14));
  CHECK(sb.at(Stat::kurtosis) == doctest::Approx((1 - 6 * p * q) / (p * q)).epsilon(1e-14));
}

TEST_CASE("degenerate series produce defined values, not NaN") {
  StatSet all = StatSet::all();
  std::vector<double> flat{2.5, 2.5, 2.5};
  auto s = summarize_series(flat, all);
  CHECK(s.at(Stat::stddev) == 0.0);
  CHECK(s.at(Stat::skewness) == 0.0);
  CHECK(s.at(Stat::kurtosis) == 0.0);
  CHECK(s.at(Stat::mean) == 2.5);
  CHECK(s.at(Stat::median) == 2.5);

  std::vector<double> one{7.0};
  auto s1 = summarize_series(one, all);
  CHECK(s1.at(Stat::stddev) == 0.0);
  CHECK(s1.at(Stat::mean) == 7.0);

  std::vector<double> empty;
  CHECK_THROWS_AS(summarize_series(empty, all), ValidationError);
}

TEST_CASE("summary statistics agree with a naive reimplementation") {
  StatSet all = StatSet::all();
  Rng rng(301);
  for (int rep = 0; rep < 30; ++rep) {
    std::size_t n = 2 + rng.uniform_index(40);
    std::vector<double> x(n);
    for (double& v : x) v = rng.normal(1.0, 3.0);
    auto s = summarize_series(x, all);
    CHECK(s.at(Stat::mean) == doctest::Approx(naive_mean(x)).epsilon(1e-12));
    double m2 = naive_moment(x, 2);
    CHECK(s.at(Stat::stddev) ==
          doctest::Approx(std::sqrt(m2 * static_cast<double>(n) / (static_cast<double>(n) - 1)))
              .epsilon(1e-12));
    CHECK(s.at(Stat::min) == *std::min_element(x.begin(), x.end()));
    CHECK(s.at(Stat::max) == *std::max_element(x.begin(), x.end()));
    CHECK(s.at(Stat::median) == doctest::Approx(naive_median(x)).epsilon(1e-12));
    CHECK(s.at(Stat::skewness) ==
          doctest::Approx(naive_moment(x, 3) / std::pow(m2, 1.5)).epsilon(1e-9));
    CHECK(s.at(Stat::kurtosis) ==
          doctest::Approx(naive_moment(x, 4) / (m2 * m2) - 3.0).epsilon(1e-9));
  }
}

TEST_CASE("statistic sets parse and reject junk") {
  StatSet s = StatSet::parse("mean,median");
  CHECK(s.size() == 2);
  CHECK(s.stats[0] == Stat::mean);
  CHECK(s.stats[1] == Stat::median);
  CHECK_THROWS_AS(StatSet::parse("variance"), ValidationError);
  CHECK_THROWS_AS(StatSet::parse("mean,mean"), ValidationError);
  CHECK_THROWS_AS(StatSet::parse(""), ValidationError);
}

TEST_CASE("base feature inventory under both schema variants") {
  FeatureSchema full;
  auto names = base_feature_names(full);
  auto mods = base_feature_modalities(full);
  REQUIRE(names.size() == 20);
  REQUIRE(mods.size() == 20);
  CHECK(base_feature_count(full) == 20);
  CHECK(names[0] == "Gaze_yaw");
  CHECK(names[2] == "Headpose_yaw");
  CHECK(names[5] == "AU06");
  CHECK(names[10] == "Emotion_neutral");
  CHECK(names[18] == "Valence");
  CHECK(names[19] == "Arousal");
  CHECK(mods[0] == "gaze");
  CHECK(mods[4] == "pose");
  CHECK(mods[9] == "au");
  CHECK(mods[17] == "emotion");
  CHECK(mods[19] == "emotion");

  FeatureSchema lean;
  lean.include_valence_arousal = false;
  CHECK(base_feature_count(lean) == 18);
  CHECK(base_feature_names(lean).size() == 18);
}

TEST_CASE("feature matrix layout: base-major columns, stat-minor") {
  FeatureSchema schema;
  Dataset ds;
  ds.dataset_id = "unit";
  ds.samples.push_back(make_sample("a", Label::truth,
                                   {{0.1, 0.0, 10.0}, {0.2, 0.0, 20.0}, {0.3, 0.0, 30.0}},
                                   schema));
  ds.samples.push_back(
      make_sample("b", Label::deception, {{0.0, 0.1, -5.0}, {0.0, 0.3, 5.0}}, schema));

  FeatureMatrix fm = build_feature_matrix(ds, StatSet::all(), schema);
  CHECK(fm.n_rows == 2);
  CHECK(fm.n_cols == 140);
  CHECK(fm.feature_names[0] == "Gaze_yaw_mean");
  CHECK(fm.feature_names[1] == "Gaze_yaw_std");
  CHECK(fm.feature_names[6] == "Gaze_yaw_kurtosis");
  CHECK(fm.feature_names[7] == "Gaze_pitch_mean");
  CHECK(fm.feature_modalities[0] == "gaze");
  CHECK(fm.feature_modalities[14] == "pose");

  std::size_t yaw_mean = fm.column_index("Headpose_yaw_mean");
  CHECK(fm.at(0, yaw_mean) == doctest::Approx(20.0).epsilon(1e-15));
  CHECK(fm.at(1, yaw_mean) == doctest::Approx(0.0).epsilon(1e-15));
  std::size_t yaw_max = fm.column_index("Headpose_yaw_max");
  CHECK(fm.at(0, yaw_max) == 30.0);
  CHECK(fm.labels[0] == Label::truth);
  CHECK(fm.labels[1] == Label::deception);
  CHECK(fm.sample_ids[1] == "b");
  CHECK_THROWS_AS(fm.column_index("NoSuchColumn"), ValidationError);

  FeatureSchema lean;
  lean.include_valence_arousal = false;
  Dataset ds2 = ds;
  FeatureMatrix fm2 = build_feature_matrix(ds2, StatSet::all(), lean);
  CHECK(fm2.n_cols == 126);

  FeatureSchema other;
  other.au_names = {"AU99"};
  CHECK_THROWS_AS(build_feature_matrix(ds, StatSet::all(), other), ValidationError);
}

TEST_CASE("modality filters select exactly the tagged columns") {
  FeatureSchema schema;
  SynthConfig cfg;
  cfg.n_samples = 4;
  cfg.frames_per_sample = 12;
  FeatureMatrix fm = build_feature_matrix(generate_synthetic(cfg, 5), StatSet::all(), schema);

  CHECK(fm.filter_modalities("gaze").n_cols == 14);
  CHECK(fm.filter_modalities("pose").n_cols == 21);
  CHECK(fm.filter_modalities("au").n_cols == 35);
  CHECK(fm.filter_modalities("emotion").n_cols == 70);
  CHECK(fm.filter_modalities("gaze,au").n_cols == 49);
  CHECK(fm.filter_modalities("all").n_cols == 140);
  for (const auto& name : fm.filter_modalities("pose").feature_names)
    CHECK(name.substr(0, 9) == "Headpose_");
  CHECK_THROWS_AS(fm.filter_modalities("sound"), ValidationError);
  CHECK_THROWS_AS(fm.filter_modalities("manual"), ValidationError);  // no manual columns here
}

TEST_CASE("row and column selection") {
  FeatureSchema schema;
  SynthConfig cfg;
  cfg.n_samples = 5;
  cfg.frames_per_sample = 10;
  FeatureMatrix fm = build_feature_matrix(generate_synthetic(cfg, 8), StatSet::all(), schema);

  std::vector<std::size_t> rows{3, 0};
  FeatureMatrix sub = fm.select_rows(rows);
  CHECK(sub.n_rows == 2);
  CHECK(sub.sample_ids[0] == fm.sample_ids[3]);
  CHECK(sub.at(0, 7) == fm.at(3, 7));
  CHECK(sub.at(1, 0) == fm.at(0, 0));

  std::vector<std::size_t> cols{2, 2, 5};
  FeatureMatrix subc = fm.select_columns(cols);
  CHECK(subc.n_cols == 3);
  CHECK(subc.feature_names[0] == subc.feature_names[1]);
  CHECK(subc.at(4, 2) == fm.at(4, 5));

  std::vector<std::size_t> bad{99};
  CHECK_THROWS_AS(fm.select_rows(bad), ValidationError);
  std::vector<std::size_t> badc{10000};
  CHECK_THROWS_AS(fm.select_columns(badc), ValidationError);
}

TEST_CASE("scaler standardizes against the reference rows only") {
  FeatureMatrix fm;
  fm.feature_names = {"f0", "f1", "f2"};
  fm.feature_modalities = {"manual", "manual", "manual"};
  fm.sample_ids = {"a", "b", "c", "d"};
  fm.dataset_ids.assign(4, "unit");
  fm.labels = {Label::truth, Label::truth, Label::deception, Label::deception};
  fm.n_rows = 4;
  fm.n_cols = 3;
  // f0 varies, f1 is constant on the reference rows, f2 varies everywhere.
  fm.values = {1.0, 5.0, 10.0,   //
               3.0, 5.0, 20.0,   //
               5.0, 9.0, 30.0,   //
               9.0, 5.0, 40.0};

  std::vector<std::size_t> ref{0, 1};
  auto [scaled, scaler] = standardize(fm, ref);
  CHECK(scaler.mean[0] == 2.0);
  CHECK(scaler.std[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(scaler.std[1] == 0.0);

  // Reference rows come out mean 0, std 1 (for varying columns).
  CHECK(scaled.at(0, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
  CHECK(scaled.at(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  // Zero-variance columns pass through untouched, including off-reference rows.
  CHECK(scaled.at(0, 1) == 5.0);
  CHECK(scaled.at(2, 1) == 9.0);
  // Held-out rows are transformed with the reference statistics.
  CHECK(scaled.at(3, 0) == doctest::Approx((9.0 - 2.0) / std::sqrt(2.0)));

  // standardize == fit_scaler + apply_scaler.
  Scaler s2 = fit_scaler(fm, ref);
  FeatureMatrix scaled2 = apply_scaler(fm, s2);
  CHECK(scaled2.values == scaled.values);

  // A single reference row has no spread: everything passes through.
  std::vector<std::size_t> one{2};
  auto [scaled_one, scaler_one] = standardize(fm, one);
  CHECK(scaler_one.std == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(scaled_one.values == fm.values);

  std::vector<std::size_t> none;
  CHECK_THROWS_AS(fit_scaler(fm, none), ValidationError);
}

TEST_CASE("manual tables become manual-modality feature matrices") {
  ManualFeatureTable t;
  t.feature_names = {"blink", "pause"};
  t.sample_ids = {"r1", "r2"};
  t.labels = {Label::truth, Label::deception};
  t.values = {1.0, 2.0, 3.0, 4.0};
  t.n_rows = 2;
  FeatureMatrix fm = to_feature_matrix(t);
  CHECK(fm.n_rows == 2);
  CHECK(fm.n_cols == 2);
  CHECK(fm.feature_modalities[0] == "manual");
  CHECK(fm.dataset_ids[0] == "manual");
  CHECK(fm.at(1, 0) == 3.0);
  CHECK(fm.filter_modalities("manual").n_cols == 2);
}

TEST_CASE("feature matrix CSV writer emits one row per sample") {
  FeatureSchema schema;
  SynthConfig cfg;
  cfg.n_samples = 3;
  cfg.frames_per_sample = 10;
  FeatureMatrix fm = build_feature_matrix(generate_synthetic(cfg, 2), StatSet::parse("mean,std"),
                                          schema);
  auto path = std::filesystem::temp_directory_path() / "veridict_features_test.csv";
  write_feature_matrix_csv(fm, path);
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line.substr(0, 24) == "sample_id,dataset_id,lab");
  CHECK(line.find("Gaze_yaw_mean") != std::string::npos);
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
  std::filesystem::remove(path);
}
