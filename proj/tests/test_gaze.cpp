#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "veridict/gaze.hpp"
#include "veridict/rng.hpp"

using namespace veridict;

TEST_CASE("bin grid geometry and edge ownership") {
  BinGrid g = BinGrid::standard();
  CHECK(g.n_bins == 28);
  CHECK(g.lo() == -42.0);
  CHECK(g.hi() == 42.0);
  CHECK(g.center(0) == -40.5);
  CHECK(g.center(27) == 40.5);

  CHECK(g.bin_index(-42.0) == 0);
  CHECK(g.bin_index(-39.0) == 1);  // interior edges belong to the upper bin
  CHECK(g.bin_index(0.0) == 14);
  CHECK(g.bin_index(41.999) == 27);
  CHECK(g.bin_index(42.0) == 27);  // the top edge folds into the last bin
  CHECK_THROWS_AS(g.bin_index(-42.001), ValidationError);
  CHECK_THROWS_AS(g.bin_index(42.001), ValidationError);

  CHECK_THROWS_AS(BinGrid::make(1, 3.0, 0.0), ValidationError);
  CHECK_THROWS_AS(BinGrid::make(4, 0.0, 0.0), ValidationError);
  CHECK_THROWS_AS(BinGrid::make(4, -1.0, 0.0), ValidationError);
}

TEST_CASE("softmax basics") {
  std::vector<double> equal{0.5, 0.5, 0.5, 0.5};
  BinDistribution u = softmax(equal);
  for (double p : u.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));

  // Two-logit closed form: p0 = 1 / (1 + exp(-(z0 - z1))).
  std::vector<double> two{1.0, 0.0};
  BinDistribution d = softmax(two);
  CHECK(d.probs[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));
  CHECK(d.probs[1] == doctest::Approx(std::exp(-1.0) / (1.0 + std::exp(-1.0))).epsilon(1e-15));

  // Max subtraction keeps huge logits finite.
  std::vector<double> huge{1000.0, 0.0};
  BinDistribution h = softmax(huge);
  CHECK(h.probs[0] == doctest::Approx(1.0));
  CHECK(h.probs[1] == doctest::Approx(0.0));
  CHECK(std::isfinite(h.probs[0]));

  // Shift invariance.
  std::vector<double> a{0.3, -1.2, 2.0};
  std::vector<double> b{100.3, 98.8, 102.0};
  BinDistribution da = softmax(a), db = softmax(b);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(da.probs[i] == doctest::Approx(db.probs[i]).epsilon(1e-12));

  std::vector<double> empty;
  CHECK_THROWS_AS(softmax(empty), ValidationError);
  std::vector<double> bad{0.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(softmax(bad), ValidationError);
}

TEST_CASE("softmax output is a probability vector") {
  Rng rng(201);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> logits(28);
    for (double& v : logits) v = rng.uniform(-8.0, 8.0);
    BinDistribution d = softmax(logits);
    double sum = 0.0;
    for (double p : d.probs) {
      CHECK(p > 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("expected angle identities") {
  BinGrid g = BinGrid::standard();

  // A one-hot distribution expects exactly its bin center.
  for (int i = 0; i < g.n_bins; ++i) {
    BinDistribution oh;
    oh.probs.assign(28, 0.0);
    oh.probs[static_cast<std::size_t>(i)] = 1.0;
    CHECK(expected_angle(oh, g) == g.center(i));
  }

  // The uniform distribution over a symmetric grid expects zero.
  BinDistribution uni;
  uni.probs.assign(28, 1.0 / 28.0);
  CHECK(expected_angle(uni, g) == 0.0);

  // Closed-form two-bin case: centers -3 and 3, p = (0.25, 0.75).
  BinGrid g2 = BinGrid::make(2, 6.0, -6.0);
  CHECK(g2.center(0) == -3.0);
  CHECK(g2.center(1) == 3.0);
  BinDistribution d2;
  d2.probs = {0.25, 0.75};
  CHECK(expected_angle(d2, g2) == 1.5);

  BinDistribution wrong;
  wrong.probs.assign(5, 0.2);
  CHECK_THROWS_AS(expected_angle(wrong, g), ValidationError);
}

TEST_CASE("combined loss validation and structure") {
  BinGrid g = BinGrid::standard();
  std::vector<double> logits(28, 0.0);

  CHECK_THROWS_AS(combined_gaze_loss(logits, 50.0, g, 1.0), ValidationError);
  CHECK_THROWS_AS(combined_gaze_loss(logits, 0.0, g, -0.5), ValidationError);
  std::vector<double> short_logits(5, 0.0);
  CHECK_THROWS_AS(combined_gaze_loss(short_logits, 0.0, g, 1.0), ValidationError);

  // lambda = 0 reduces to plain cross-entropy.
  GazeLoss ce_only = combined_gaze_loss(logits, 10.0, g, 0.0);
  CHECK(ce_only.value == ce_only.cross_entropy);

  // Uniform logits, target in bin 14: CE = log(28), E = 0.
  GazeLoss flat = combined_gaze_loss(logits, 1.0, g, 1.0);
  CHECK(flat.cross_entropy == doctest::Approx(std::log(28.0)).epsilon(1e-12));
  CHECK(flat.regression == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(flat.value == doctest::Approx(std::log(28.0) + 1.0).epsilon(1e-12));

  // Both terms are non-negative, so the loss is too.
  Rng rng(202);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> z(28);
    for (double& v : z) v = rng.uniform(-6.0, 6.0);
    GazeLoss loss = combined_gaze_loss(z, rng.uniform(-42.0, 42.0), g, rng.uniform(0.0, 3.0));
    CHECK(loss.cross_entropy >= 0.0);
    CHECK(loss.regression >= 0.0);
    CHECK(loss.value >= 0.0);
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  BinGrid g = BinGrid::standard();
  Rng rng(203);
  // Loss values here reach ~1e4 (wide logits, lambda to 2.5, far targets), so
  // h = 1e-6 would leave ~4e-6 of subtractive cancellation in the quotient.
  const double h = 1e-5;
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> z(28);
    for (double& v : z) v = rng.uniform(-4.0, 4.0);
    double target = rng.uniform(-41.9, 41.9);
    double lambda = (rep % 4 == 0) ? 0.0 : rng.uniform(0.1, 2.5);

    GazeLoss loss = combined_gaze_loss(z, target, g, lambda);
    for (std::size_t i = 0; i < z.size(); ++i) {
      std::vector<double> zp = z, zm = z;
      zp[i] += h;
      zm[i] -= h;
      double fd = (combined_gaze_loss(zp, target, g, lambda).value -
                   combined_gaze_loss(zm, target, g, lambda).value) /
                  (2.0 * h);
      double rel = std::abs(fd - loss.grad[i]) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, rel);
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("gradient components sum to roughly zero only in the pure CE case") {
  // CE gradient sums to exactly p - onehot totals = 0; the expectation term
  // adds 2 lambda err * sum p_i (c_i - E) which is also 0. So the full
  // gradient always sums to ~0: a useful conservation check.
  BinGrid g = BinGrid::standard();
  Rng rng(204);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> z(28);
    for (double& v : z) v = rng.uniform(-4.0, 4.0);
    GazeLoss loss = combined_gaze_loss(z, rng.uniform(-40.0, 40.0), g, rng.uniform(0.0, 2.0));
    double s = 0.0;
    for (double gi : loss.grad) s += gi;
    CHECK(std::abs(s) < 1e-9);
  }
}

TEST_CASE("shifting grid and target together leaves the loss unchanged") {
  BinGrid g = BinGrid::standard();
  BinGrid shifted = BinGrid::make(28, 3.0, -42.0 + 7.5);
  Rng rng(205);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> z(28);
    for (double& v : z) v = rng.uniform(-4.0, 4.0);
    double target = rng.uniform(-40.0, 40.0);
    GazeLoss a = combined_gaze_loss(z, target, g, 1.3);
    GazeLoss b = combined_gaze_loss(z, target + 7.5, shifted, 1.3);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
    CHECK(a.cross_entropy == b.cross_entropy);
    for (std::size_t i = 0; i < z.size(); ++i)
      CHECK(a.grad[i] == doctest::Approx(b.grad[i]).epsilon(1e-9));
  }
}
