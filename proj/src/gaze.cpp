#include "veridict/gaze.hpp"

#include <algorithm>
#include <cmath>

namespace veridict {

BinGrid BinGrid::make(int n_bins, double width_deg, double origin_deg) {
  if (n_bins < 2) throw ValidationError("bin grid needs at least 2 bins");
  if (!(width_deg > 0.0)) throw ValidationError("bin width must be positive");
  if (!std::isfinite(origin_deg)) throw ValidationError("bin origin must be finite");
  return BinGrid{n_bins, width_deg, origin_deg};
}

BinGrid BinGrid::standard() { return make(28, 3.0, -42.0); }

int BinGrid::bin_index(double angle_deg) const {
  if (!(angle_deg >= lo() && angle_deg <= hi()))
    throw ValidationError("angle outside bin grid coverage");
  double t = (angle_deg - origin_deg) / width_deg;
  int i = static_cast<int>(std::floor(t));
  return std::min(i, n_bins - 1);  // upper edge folds into the last bin
}

BinDistribution softmax(std::span<const double> logits) {
  if (logits.empty()) throw ValidationError("softmax: empty logits");
  double mx = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) throw ValidationError("softmax: non-finite logit");
    mx = std::max(mx, v);
  }
  BinDistribution d;
  d.probs.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    d.probs[i] = std::exp(logits[i] - mx);
    sum += d.probs[i];
  }
  for (double& p : d.probs) p /= sum;
  return d;
}

double expected_angle(const BinDistribution& dist, const BinGrid& grid) {
  if (static_cast<int>(dist.probs.size()) != grid.n_bins)
    throw ValidationError("distribution size does not match bin grid");
  double e = 0.0;
  for (int i = 0; i < grid.n_bins; ++i) e += dist.probs[static_cast<std::size_t>(i)] * grid.center(i);
  return e;
}

GazeLoss combined_gaze_loss(std::span<const double> logits, double target_deg,
                            const BinGrid& grid, double lambda) {
  if (static_cast<int>(logits.size()) != grid.n_bins)
    throw ValidationError("logit count does not match bin grid");
  if (lambda < 0.0) throw ValidationError("lambda must be non-negative");
  int target_bin = grid.bin_index(target_deg);  // validates coverage

  BinDistribution d = softmax(logits);
  double e = expected_angle(d, grid);

  GazeLoss out;
  // Softmax probabilities are strictly positive, so the log is safe.
  out.cross_entropy = -std::log(d.probs[static_cast<std::size_t>(target_bin)]);
  double err = e - target_deg;
  out.regression = err * err;
  out.value = out.cross_entropy + lambda * out.regression;

  // d CE / d z_i = p_i - [i == target]
  // d E  / d z_i = p_i (c_i - E), so the expectation term contributes
  // 2 lambda (E - target) p_i (c_i - E).
  out.grad.resize(logits.size());
  for (int i = 0; i < grid.n_bins; ++i) {
    auto ui = static_cast<std::size_t>(i);
    double g = d.probs[ui] - (i == target_bin ? 1.0 : 0.0);
    g += 2.0 * lambda * err * d.probs[ui] * (grid.center(i) - e);
    out.grad[ui] = g;
  }
  return out;
}

}  // namespace veridict
