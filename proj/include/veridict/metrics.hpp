#pragma once

#include <span>
#include <vector>

#include "veridict/types.hpp"

namespace veridict {

// Deception is the positive class throughout.
struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
};

ConfusionMatrix confusion(std::span<const Label> labels, std::span<const Label> preds);

double accuracy(const ConfusionMatrix& m);
// F1 = 0 when precision + recall = 0 (the all-majority degenerate case).
double f1(const ConfusionMatrix& m);
// MCC = 0 when any marginal is 0.
double mcc(const ConfusionMatrix& m);

struct RocPoint {
  double fpr = 0.0, tpr = 0.0;
  double threshold = 0.0;  // predict positive when score >= threshold
};

struct RocResult {
  std::vector<RocPoint> points;  // from (0,0) to (1,1), monotone in both axes
  double auc = 0.0;              // trapezoidal == Mann-Whitney with ties at 1/2
};

RocResult roc_auc(std::span<const double> scores, std::span<const Label> labels);

// Concordance correlation, population moments:
//   2 cov(x,y) / (var x + var y + (mean x - mean y)^2)
// Defined as 1 when both series are constant with equal means, 0 when
// constant with unequal means.
double ccc(std::span<const double> x, std::span<const double> y);

struct LinearFit {
  double r = 0.0, slope = 0.0, intercept = 0.0;
};

// Pearson correlation and least-squares line. Constant x is an error;
// constant y yields r = 0 with a flat line.
LinearFit correlate(std::span<const double> x, std::span<const double> y);

}  // namespace veridict
