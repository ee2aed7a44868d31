#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vssc/core/dataset.hpp"

namespace vssc::labels {

struct VerificationPair {
  std::string image_a;
  std::string image_b;
  bool same_identity = false;
  bool poisoned = false;
};

struct PairSet {
  std::vector<VerificationPair> pairs;
  bool insufficient = false;  // fewer pairs than requested were available
  std::size_t same_count = 0;
  std::size_t diff_count = 0;
};

// Labels are identities. Same pairs come first, then different pairs; no
// unordered pair appears twice.
PairSet build_verification_pairs(const LabeledDataset& gallery, std::size_t num_same, std::size_t num_diff,
                                 std::uint64_t seed);

}  // namespace vssc::labels
