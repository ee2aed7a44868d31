#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vssc/eval/report.hpp"
#include "vssc/labels/verification.hpp"

namespace vssc::eval {

using Embeddings = std::map<std::string, Eigen::VectorXf>;

struct PairScore {
  bool same_identity = false;
  bool poisoned = false;
  double similarity = 0.0;
};

double cosine_similarity(const Eigen::VectorXf& x, const Eigen::VectorXf& y);

// Throws ConfigError when an id has no embedding.
std::vector<PairScore> score_pairs(const std::vector<labels::VerificationPair>& pairs, const Embeddings& embeddings);

// Pairs with similarity >= threshold are decided same-identity. C-Acc over
// clean pairs; ASR is the same-identity rate over poisoned pairs.
EvalReport eval_verification(const std::vector<PairScore>& scores, double threshold);
EvalReport eval_verification(const std::vector<labels::VerificationPair>& pairs, const Embeddings& embeddings,
                             double threshold);

// Threshold maximizing clean-pair accuracy; candidates are midpoints between
// consecutive sorted similarities (ties resolve to the smallest threshold).
double choose_threshold(const std::vector<PairScore>& clean_scores);

}  // namespace vssc::eval
