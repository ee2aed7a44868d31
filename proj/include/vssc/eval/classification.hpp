#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vssc/core/dataset.hpp"
#include "vssc/eval/network.hpp"
#include "vssc/eval/report.hpp"

namespace vssc::eval {

// Poisoned copies of non-target test images; labels keep the original class.
struct PoisonedTestSet {
  std::vector<Sample> samples;
  std::vector<std::size_t> source_indices;  // index into the clean test set
  std::size_t excluded_target = 0;          // target-class originals skipped
  std::size_t failures = 0;                 // poisoner gave up on these
};

// Returns the poisoned image, or nullopt when poisoning failed.
using Poisoner = std::function<std::optional<ImageBuffer>(const Sample& sample, std::size_t index)>;

PoisonedTestSet build_poisoned_test_set(const LabeledDataset& clean_test, int target, const Poisoner& poisoner);

// Metrics from raw predictions. Poisoned originals must not carry the target
// label, so ASR + R-Acc <= 1 by construction.
EvalReport classification_report(std::span<const int> clean_labels, std::span<const int> clean_pred,
                                 std::span<const int> poisoned_labels, std::span<const int> poisoned_pred,
                                 int target, std::size_t excluded_count = 0);

EvalReport eval_classification(const Classifier& model, const LabeledDataset& clean_test,
                               const PoisonedTestSet& poisoned, int target);

}  // namespace vssc::eval
