#pragma once

namespace vssc::eval {

struct MetricPair {
  double c_acc = 0.0;
  double asr = 0.0;
};

struct DefenseOutcome {
  MetricPair pre;
  MetricPair post;
  double nder = 0.0;
};

// Normalized defense-effectiveness rating:
// [max(0, asr_pre - asr_post) - max(0, cacc_pre - cacc_post) + 1] / 2,
// clamped to [0, 1]. Inputs are fractions.
double compute_nder(const MetricPair& pre, const MetricPair& post);

DefenseOutcome defense_outcome(const MetricPair& pre, const MetricPair& post);

}  // namespace vssc::eval
