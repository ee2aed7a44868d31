#include "vssc/eval/classification.hpp"

#include "vssc/core/errors.hpp"

namespace vssc::eval {

PoisonedTestSet build_poisoned_test_set(const LabeledDataset& clean_test, int target, const Poisoner& poisoner) {
  PoisonedTestSet out;
  for (std::size_t i = 0; i < clean_test.size(); ++i) {
    const auto& s = clean_test.samples[i];
    if (s.label == target) {
      ++out.excluded_target;
      continue;
    }
    auto img = poisoner(s, i);
    if (!img) {
      ++out.failures;
      continue;
    }
    if (!img->same_shape(s.image)) throw DimensionError("poisoner changed the shape of '" + s.id + "'");
    out.samples.push_back({s.id, std::move(*img), s.label});
    out.source_indices.push_back(i);
  }
  return out;
}

EvalReport classification_report(std::span<const int> clean_labels, std::span<const int> clean_pred,
                                 std::span<const int> poisoned_labels, std::span<const int> poisoned_pred,
                                 int target, std::size_t excluded_count) {
  if (clean_labels.size() != clean_pred.size() || poisoned_labels.size() != poisoned_pred.size())
    throw DimensionError("prediction and label counts differ");
  EvalReport r;
  r.task = Task::kClassification;
  r.clean_count = clean_labels.size();
  r.poisoned_count = poisoned_labels.size();
  r.excluded_count = excluded_count;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < clean_labels.size(); ++i) correct += clean_pred[i] == clean_labels[i] ? 1 : 0;
  r.c_acc = clean_labels.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(clean_labels.size());
  if (!poisoned_labels.empty()) {
    std::size_t hit = 0, kept = 0;
    for (std::size_t i = 0; i < poisoned_labels.size(); ++i) {
      if (poisoned_labels[i] == target) throw ConfigError("poisoned test set contains a target-class original");
      hit += poisoned_pred[i] == target ? 1 : 0;
      kept += poisoned_pred[i] == poisoned_labels[i] ? 1 : 0;
    }
    const auto n = static_cast<double>(poisoned_labels.size());
    r.asr = static_cast<double>(hit) / n;
    r.r_acc = static_cast<double>(kept) / n;
  }
  return r;
}

EvalReport eval_classification(const Classifier& model, const LabeledDataset& clean_test,
                               const PoisonedTestSet& poisoned, int target) {
  std::vector<const ImageBuffer*> clean_images, poisoned_images;
  std::vector<int> clean_labels, poisoned_labels;
  for (const auto& s : clean_test.samples) {
    clean_images.push_back(&s.image);
    clean_labels.push_back(s.label);
  }
  for (const auto& s : poisoned.samples) {
    poisoned_images.push_back(&s.image);
    poisoned_labels.push_back(s.label);
  }
  const auto clean_pred = model.predict(clean_images);
  const auto poisoned_pred = model.predict(poisoned_images);
  auto r = classification_report(clean_labels, clean_pred, poisoned_labels, poisoned_pred, target,
                                 poisoned.excluded_target + poisoned.failures);
  r.poison_failures = poisoned.failures;
  return r;
}

}  // namespace vssc::eval
