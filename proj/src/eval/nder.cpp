#include "vssc/eval/nder.hpp"

#include <algorithm>

#include "vssc/core/errors.hpp"

namespace vssc::eval {

namespace {

void check(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string("nDER input out of [0, 1]: ") + what);
}

}  // namespace

double compute_nder(const MetricPair& pre, const MetricPair& post) {
  check(pre.c_acc, "pre c_acc");
  check(pre.asr, "pre asr");
  check(post.c_acc, "post c_acc");
  check(post.asr, "post asr");
  const double gain = std::max(0.0, pre.asr - post.asr);
  const double cost = std::max(0.0, pre.c_acc - post.c_acc);
  return std::clamp((gain - cost + 1.0) / 2.0, 0.0, 1.0);
}

DefenseOutcome defense_outcome(const MetricPair& pre, const MetricPair& post) {
  return {pre, post, compute_nder(pre, post)};
}

}  // namespace vssc::eval
