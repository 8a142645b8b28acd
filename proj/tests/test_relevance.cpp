#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "doctest.h"
#include "veridict/relevance.hpp"
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

// One label-copy column among gaussian noise columns.
FeatureMatrix signal_plus_noise(std::size_t n, std::size_t n_noise, Rng& rng) {
  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  std::vector<std::string> names{"signal"};
  for (std::size_t j = 0; j < n_noise; ++j) names.push_back("noise" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) {
    bool dec = i % 2 == 1;
    std::vector<double> row{dec ? 1.0 : 0.0};
    for (std::size_t j = 0; j < n_noise; ++j) row.push_back(rng.normal());
    rows.push_back(std::move(row));
    labels.push_back(dec ? Label::deception : Label::truth);
  }
  return make_matrix(rows, labels, names);
}

FeatureRanking toy_ranking(std::size_t d) {
  FeatureRanking r;
  for (std::size_t i = 0; i < d; ++i)
    r.entries.push_back({"f" + std::to_string(i), static_cast<double>(d - i)});
  return r;
}

}  // namespace

TEST_CASE("the label-copy feature outranks noise almost always") {
  Rng data_rng(501);
  int first = 0;
  const int runs = 100;
  for (int run = 0; run < runs; ++run) {
    FeatureMatrix fm = signal_plus_noise(120, 5, data_rng);
    ImportanceConfig cfg;
    cfg.n_repeats = 5;
    FeatureRanking r = permutation_importance(fm, cfg, static_cast<std::uint64_t>(run));
    first += r.entries[0].name == "signal";
  }
  CHECK(first >= 95);
}

TEST_CASE("noise features have near-zero mean importance") {
  Rng data_rng(502);
  FeatureMatrix fm = signal_plus_noise(140, 3, data_rng);
  std::map<std::string, double> sum;
  const int runs = 50;
  for (int run = 0; run < runs; ++run) {
    ImportanceConfig cfg;
    cfg.n_repeats = 10;
    FeatureRanking r = permutation_importance(fm, cfg, 1000 + static_cast<std::uint64_t>(run));
    for (const auto& e : r.entries) sum[e.name] += e.importance;
  }
  for (const auto& [name, total] : sum) {
    if (name == "signal") continue;
    double mean = total / runs;
    CHECK(std::abs(mean) <= 0.02);
  }
  // The signal column's mean importance is decidedly positive.
  CHECK(sum.at("signal") / runs > 0.2);
}

TEST_CASE("ranking ignores caller column order and thread count") {
  Rng data_rng(503);
  FeatureMatrix fm = signal_plus_noise(100, 4, data_rng);
  ImportanceConfig cfg;
  cfg.n_repeats = 6;
  FeatureRanking base = permutation_importance(fm, cfg, 9);

  // Reverse the columns: identical ranking, names and numbers.
  std::vector<std::size_t> rev(fm.n_cols);
  for (std::size_t i = 0; i < fm.n_cols; ++i) rev[i] = fm.n_cols - 1 - i;
  FeatureRanking perm = permutation_importance(fm.select_columns(rev), cfg, 9);
  REQUIRE(perm.entries.size() == base.entries.size());
  for (std::size_t i = 0; i < base.entries.size(); ++i) {
    CHECK(perm.entries[i].name == base.entries[i].name);
    CHECK(perm.entries[i].importance == base.entries[i].importance);
  }

  ImportanceConfig par = cfg;
  par.n_threads = 4;
  FeatureRanking threaded = permutation_importance(fm, par, 9);
  for (std::size_t i = 0; i < base.entries.size(); ++i) {
    CHECK(threaded.entries[i].name == base.entries[i].name);
    CHECK(threaded.entries[i].importance == base.entries[i].importance);
  }

  FeatureRanking again = permutation_importance(fm, cfg, 9);
  for (std::size_t i = 0; i < base.entries.size(); ++i)
    CHECK(again.entries[i].importance == base.entries[i].importance);
}

TEST_CASE("constant columns tie at zero and break ties by name") {
  Rng data_rng(504);
  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < 60; ++i) {
    bool dec = i % 2 == 1;
    rows.push_back({dec ? 1.0 : 0.0, 3.0, 3.0});
    labels.push_back(dec ? Label::deception : Label::truth);
  }
  FeatureMatrix fm = make_matrix(rows, labels, {"signal", "zz_const", "aa_const"});
  ImportanceConfig cfg;
  cfg.n_repeats = 3;
  FeatureRanking r = permutation_importance(fm, cfg, 1);
  REQUIRE(r.entries.size() == 3);
  CHECK(r.entries[0].name == "signal");
  // Shuffling a constant column changes nothing: exact zero importance.
  CHECK(r.entries[1].importance == 0.0);
  CHECK(r.entries[2].importance == 0.0);
  CHECK(r.entries[1].name == "aa_const");
  CHECK(r.entries[2].name == "zz_const");
}

TEST_CASE("importance configuration is validated") {
  Rng data_rng(505);
  FeatureMatrix fm = signal_plus_noise(40, 2, data_rng);
  ImportanceConfig bad_rep;
  bad_rep.n_repeats = 0;
  CHECK_THROWS_AS(permutation_importance(fm, bad_rep, 0), ValidationError);
  ImportanceConfig bad_frac;
  bad_frac.holdout_fraction = 0.0;
  CHECK_THROWS_AS(permutation_importance(fm, bad_frac, 0), ValidationError);
  ImportanceConfig bad_clf;
  bad_clf.clf = ClassifierKind::trivial;
  CHECK_THROWS_AS(permutation_importance(fm, bad_clf, 0), ValidationError);

  FeatureMatrix one_class = make_matrix({{1.0}, {2.0}}, {Label::truth, Label::truth}, {"x"});
  CHECK_THROWS_AS(permutation_importance(one_class, ImportanceConfig{}, 0), ValidationError);
}

TEST_CASE("top-fraction selection takes nested ceil(f*d) prefixes") {
  FeatureRanking r = toy_ranking(10);
  auto quarter = select_top_fraction(r, 0.25);
  auto half = select_top_fraction(r, 0.5);
  auto all = select_top_fraction(r, 1.0);
  CHECK(quarter.size() == 3);  // ceil(2.5)
  CHECK(half.size() == 5);
  CHECK(all.size() == 10);
  CHECK(std::equal(quarter.begin(), quarter.end(), half.begin()));
  CHECK(std::equal(half.begin(), half.end(), all.begin()));
  CHECK(quarter[0] == "f0");

  auto tiny = select_top_fraction(r, 0.01);
  CHECK(tiny.size() == 1);  // never empty

  CHECK_THROWS_AS(select_top_fraction(r, 0.0), ValidationError);
  CHECK_THROWS_AS(select_top_fraction(r, 1.5), ValidationError);
  FeatureRanking empty;
  CHECK_THROWS_AS(select_top_fraction(empty, 0.5), ValidationError);
}

TEST_CASE("pca finds the dominant direction of a tilted cloud") {
  Rng rng(506);
  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  for (int i = 0; i < 200; ++i) {
    double t = rng.normal(0.0, 2.0);
    rows.push_back({t + rng.normal(0.0, 0.05), t + rng.normal(0.0, 0.05)});
    labels.push_back(i % 2 ? Label::deception : Label::truth);
  }
  FeatureMatrix fm = make_matrix(rows, labels, {"x", "y"});
  auto [proj, st] = pca_reduce(fm, 0.9);
  CHECK(st.n_components == 1);
  CHECK(st.explained_ratio > 0.99);
  CHECK(st.eigenvalues.size() == 2);
  CHECK(st.eigenvalues[0] > st.eigenvalues[1]);
  // The leading direction is (1,1)/sqrt(2), sign-canonicalized positive.
  CHECK(st.components[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.02));
  CHECK(st.components[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.02));
  CHECK(proj.n_cols == 1);
  CHECK(proj.feature_names[0] == "PC1");
  CHECK(proj.feature_modalities[0] == "pca");
  CHECK(proj.labels == fm.labels);
}

TEST_CASE("full-variance pca reconstructs the data and diagonalizes it") {
  Rng rng(507);
  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  for (int i = 0; i < 60; ++i) {
    rows.push_back({rng.normal(1.0, 1.0), rng.normal(-2.0, 3.0), rng.normal(0.0, 0.5),
                    rng.normal(5.0, 2.0)});
    labels.push_back(i % 2 ? Label::deception : Label::truth);
  }
  FeatureMatrix fm = make_matrix(rows, labels, {"a", "b", "c", "d"});
  auto [proj, st] = pca_reduce(fm, 1.0);
  const std::size_t d = 4;
  REQUIRE(st.n_components == d);

  // Eigenvalues account for exactly the total variance.
  double total_ev = 0.0;
  for (double ev : st.eigenvalues) total_ev += ev;
  double total_var = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    double mu = 0.0;
    for (std::size_t r = 0; r < fm.n_rows; ++r) mu += fm.at(r, c);
    mu /= static_cast<double>(fm.n_rows);
    double v = 0.0;
    for (std::size_t r = 0; r < fm.n_rows; ++r) v += (fm.at(r, c) - mu) * (fm.at(r, c) - mu);
    total_var += v / static_cast<double>(fm.n_rows - 1);
  }
  CHECK(total_ev == doctest::Approx(total_var).epsilon(1e-9));
  CHECK(st.explained_ratio == doctest::Approx(1.0).epsilon(1e-12));

  // Projected columns are uncorrelated with variance equal to the eigenvalue.
  for (std::size_t i = 0; i < d; ++i) {
    double mi = 0.0;
    for (std::size_t r = 0; r < proj.n_rows; ++r) mi += proj.at(r, i);
    mi /= static_cast<double>(proj.n_rows);
    for (std::size_t j = i; j < d; ++j) {
      double mj = 0.0;
      for (std::size_t r = 0; r < proj.n_rows; ++r) mj += proj.at(r, j);
      mj /= static_cast<double>(proj.n_rows);
      double cov = 0.0;
      for (std::size_t r = 0; r < proj.n_rows; ++r)
        cov += (proj.at(r, i) - mi) * (proj.at(r, j) - mj);
      cov /= static_cast<double>(proj.n_rows - 1);
      if (i == j)
        CHECK(cov == doctest::Approx(st.eigenvalues[i]).epsilon(1e-7));
      else
        CHECK(std::abs(cov) < 1e-7 * st.eigenvalues[0]);
    }
  }

  // Projecting and back-projecting reproduces every value.
  double worst = 0.0;
  for (std::size_t r = 0; r < fm.n_rows; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      double rec = st.mean[c];
      for (std::size_t k = 0; k < d; ++k) rec += proj.at(r, k) * st.components[k * d + c];
      worst = std::max(worst, std::abs(rec - fm.at(r, c)));
    }
  CHECK(worst < 1e-8);

  // The state projects held-out rows of the right width, and only those.
  FeatureMatrix probe = make_matrix({{0.0, 0.0, 0.0, 0.0}}, {Label::truth}, {"a", "b", "c", "d"});
  FeatureMatrix pr = pca_apply(st, probe);
  CHECK(pr.n_cols == d);
  FeatureMatrix narrow = make_matrix({{0.0}}, {Label::truth}, {"a"});
  CHECK_THROWS_AS(pca_apply(st, narrow), ValidationError);

  CHECK_THROWS_AS(pca_reduce(fm, 0.0), ValidationError);
  CHECK_THROWS_AS(pca_reduce(fm, 1.5), ValidationError);
  FeatureMatrix one_row = make_matrix({{1.0, 2.0, 3.0, 4.0}}, {Label::truth},
                                      {"a", "b", "c", "d"});
  CHECK_THROWS_AS(pca_reduce(one_row, 0.9), ValidationError);
}

TEST_CASE("ranking csv lists features in rank order") {
  FeatureRanking r = toy_ranking(3);
  auto path = std::filesystem::temp_directory_path() / "veridict_ranking_test.csv";
  write_ranking_csv(r, path);
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "rank,feature,importance");
  REQUIRE(std::getline(in, line));
  CHECK(line == "1,f0,3");
  REQUIRE(std::getline(in, line));
  CHECK(line == "2,f1,2");
  std::filesystem::remove(path);
}
