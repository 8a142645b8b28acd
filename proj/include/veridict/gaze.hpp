#pragma once

#include <span>
#include <vector>

#include "veridict/types.hpp"

namespace veridict {

// Uniform 1D angular bin grid. Bin i covers
//   [origin + i*width, origin + (i+1)*width)
// with center origin + (i + 0.5)*width; the last bin includes its upper edge.
struct BinGrid {
  int n_bins = 0;
  double width_deg = 0.0;
  double origin_deg = 0.0;

  static BinGrid make(int n_bins, double width_deg, double origin_deg);
  // 28 bins of 3 degrees covering [-42, 42].
  static BinGrid standard();

  double center(int i) const { return origin_deg + (static_cast<double>(i) + 0.5) * width_deg; }
  double lo() const { return origin_deg; }
  double hi() const { return origin_deg + n_bins * width_deg; }
  int bin_index(double angle_deg) const;  // throws ValidationError outside coverage
};

struct BinDistribution {
  std::vector<double> probs;  // non-negative, sums to 1 within 1e-9
};

// Numerically stable softmax (max-subtracted). Input must be non-empty and finite.
BinDistribution softmax(std::span<const double> logits);

// Expectation of the bin-center angle under the distribution.
double expected_angle(const BinDistribution& dist, const BinGrid& grid);

struct GazeLoss {
  double value = 0.0;          // cross_entropy + lambda * (expected - target)^2
  double cross_entropy = 0.0;
  double regression = 0.0;     // squared expectation error term, without lambda
  std::vector<double> grad;    // d value / d logits
};

// Combined classification + expectation loss over raw logits. The target
// angle must lie inside the grid coverage; lambda must be non-negative.
GazeLoss combined_gaze_loss(std::span<const double> logits, double target_deg,
                            const BinGrid& grid, double lambda);

}  // namespace veridict
