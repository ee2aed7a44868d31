#pragma once

#include <cmath>
#include <functional>

#include "vssc/core/dataset.hpp"

namespace vssc::testing {

// Walks the seeded candidate order one sample and attempt at a time.
inline std::size_t simulate_stage_one(const LabeledDataset& ds, const AttackConfig& cfg,
                                      const std::function<bool(int, int)>& rule) {
  const auto order = select_poison_indices(ds, cfg).indices;
  const std::size_t target = static_cast<std::size_t>(std::floor(cfg.poisoning_ratio * ds.size() + 1e-9));
  std::size_t poisoned = 0;
  for (auto idx : order) {
    if (poisoned == target) break;
    for (int a = 0; a < cfg.max_attempts; ++a) {
      if (rule(static_cast<int>(idx), a)) {
        ++poisoned;
        break;
      }
    }
  }
  return poisoned;
}

}  // namespace vssc::testing
