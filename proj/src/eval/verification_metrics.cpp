#include "vssc/eval/verification.hpp"

#include <algorithm>

#include "vssc/core/errors.hpp"

namespace vssc::eval {

double cosine_similarity(const Eigen::VectorXf& x, const Eigen::VectorXf& y) {
  if (x.size() != y.size()) throw DimensionError("embedding sizes differ");
  const double nx = x.cast<double>().norm(), ny = y.cast<double>().norm();
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return x.cast<double>().dot(y.cast<double>()) / (nx * ny);
}

std::vector<PairScore> score_pairs(const std::vector<labels::VerificationPair>& pairs, const Embeddings& embeddings) {
  auto lookup = [&](const std::string& id) -> const Eigen::VectorXf& {
    auto it = embeddings.find(id);
    if (it == embeddings.end()) throw ConfigError("no embedding for '" + id + "'");
    return it->second;
  };
  std::vector<PairScore> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs)
    out.push_back({p.same_identity, p.poisoned, cosine_similarity(lookup(p.image_a), lookup(p.image_b))});
  return out;
}

EvalReport eval_verification(const std::vector<PairScore>& scores, double threshold) {
  EvalReport r;
  r.task = Task::kVerification;
  std::size_t clean = 0, correct = 0, poisoned = 0, fooled = 0;
  for (const auto& s : scores) {
    const bool same = s.similarity >= threshold;
    if (s.poisoned) {
      ++poisoned;
      fooled += same ? 1 : 0;
    } else {
      ++clean;
      correct += same == s.same_identity ? 1 : 0;
    }
  }
  r.clean_count = clean;
  r.poisoned_count = poisoned;
  r.c_acc = clean == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(clean);
  if (poisoned > 0) r.asr = static_cast<double>(fooled) / static_cast<double>(poisoned);
  return r;
}

EvalReport eval_verification(const std::vector<labels::VerificationPair>& pairs, const Embeddings& embeddings,
                             double threshold) {
  return eval_verification(score_pairs(pairs, embeddings), threshold);
}

double choose_threshold(const std::vector<PairScore>& clean_scores) {
  if (clean_scores.empty()) throw ConfigError("threshold selection needs clean pairs");
  std::vector<double> sims;
  for (const auto& s : clean_scores) sims.push_back(s.similarity);
  std::sort(sims.begin(), sims.end());
  std::vector<double> candidates{sims.front() - 1e-6};
  for (std::size_t i = 1; i < sims.size(); ++i)
    if (sims[i] != sims[i - 1]) candidates.push_back(0.5 * (sims[i] + sims[i - 1]));
  candidates.push_back(sims.back() + 1e-6);
  double best_t = candidates.front();
  std::size_t best = 0;
  for (double t : candidates) {
    std::size_t correct = 0;
    for (const auto& s : clean_scores) correct += (s.similarity >= t) == s.same_identity ? 1 : 0;
    if (correct > best) {
      best = correct;
      best_t = t;
    }
  }
  return best_t;
}

}  // namespace vssc::eval
