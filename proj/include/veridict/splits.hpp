#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "veridict/rng.hpp"
#include "veridict/types.hpp"

namespace veridict {

// One random train/test split; indices returned sorted ascending. Stratified
// mode draws round(fraction * n_c) train rows per class c.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> random_split(
    const std::vector<Label>& labels, double train_fraction, bool stratified, Rng& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("train fraction must lie in (0, 1)");
  std::vector<std::size_t> train, test;
  if (stratified) {
    for (Label cls : {Label::truth, Label::deception}) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == cls) idx.push_back(i);
      rng.shuffle(idx);
      std::size_t k = static_cast<std::size_t>(
          std::llround(train_fraction * static_cast<double>(idx.size())));
      for (std::size_t i = 0; i < idx.size(); ++i) (i < k ? train : test).push_back(idx[i]);
    }
  } else {
    std::vector<std::size_t> idx(labels.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    std::size_t k = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < idx.size(); ++i) (i < k ? train : test).push_back(idx[i]);
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

}  // namespace veridict
