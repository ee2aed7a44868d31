#pragma once

#include <string>
#include <vector>

#include "vssc/distortions/distortions.hpp"
#include "vssc/eval/classification.hpp"

namespace vssc::eval {

Scenario scenario_for(const distort::DistortionConfig& config);

// Distorts the clean and poisoned test images (per-sample seeds keyed on the
// clean test index) and evaluates.
EvalReport evaluate_under(const Classifier& model, const LabeledDataset& clean_test, const PoisonedTestSet& poisoned,
                          const distort::DistortionConfig& config, int target);

// Digital report first, then one report per distortion, in order.
std::vector<EvalReport> run_scenario_sweep(const Classifier& model, const LabeledDataset& clean_test,
                                           const PoisonedTestSet& poisoned,
                                           const std::vector<distort::DistortionConfig>& distortions, int target,
                                           const std::string& attack = "");

// Poisons the test set once with `poisoner`, then sweeps.
std::vector<EvalReport> run_scenario_sweep(const Classifier& model, const LabeledDataset& clean_test,
                                           const Poisoner& poisoner,
                                           const std::vector<distort::DistortionConfig>& distortions, int target,
                                           const std::string& attack = "");

}  // namespace vssc::eval
