#include "vssc/eval/detection.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "vssc/core/errors.hpp"

namespace vssc::eval {

double iou(const BoundingBox& x, const BoundingBox& y) {
  const double ix = std::max(0.0, std::min(x.a + x.w, y.a + y.w) - std::max(x.a, y.a));
  const double iy = std::max(0.0, std::min(x.b + x.h, y.b + y.h) - std::max(x.b, y.b));
  const double inter = ix * iy;
  const double uni = x.area() + y.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

void check_shapes(const ImageBoxes& predictions, const ImageBoxes& ground_truth) {
  if (predictions.size() != ground_truth.size()) throw DimensionError("prediction and ground-truth image counts differ");
  for (const auto& img : predictions)
    for (const auto& p : img)
      if (!p.confidence) throw ConfigError("detection predictions must carry confidences");
}

struct Ref {
  std::size_t image;
  std::size_t index;
  double confidence;
};

std::vector<Ref> sorted_by_confidence(const ImageBoxes& predictions, int cls, double min_conf) {
  std::vector<Ref> refs;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    for (std::size_t k = 0; k < predictions[i].size(); ++k) {
      const auto& p = predictions[i][k];
      if ((cls < 0 || p.c == cls) && *p.confidence >= min_conf) refs.push_back({i, k, *p.confidence});
    }
  std::stable_sort(refs.begin(), refs.end(), [](const Ref& x, const Ref& y) { return x.confidence > y.confidence; });
  return refs;
}

}  // namespace

std::optional<double> average_precision(const ImageBoxes& predictions, const ImageBoxes& ground_truth, int cls,
                                        double iou_threshold, ApInterpolation interp) {
  check_shapes(predictions, ground_truth);
  std::size_t npos = 0;
  std::vector<std::vector<bool>> claimed(ground_truth.size());
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    claimed[i].assign(ground_truth[i].size(), false);
    for (const auto& g : ground_truth[i]) npos += g.c == cls ? 1 : 0;
  }
  if (npos == 0) return std::nullopt;

  const auto dets = sorted_by_confidence(predictions, cls, -std::numeric_limits<double>::infinity());
  std::vector<double> precision, recall;
  std::size_t tp = 0, fp = 0;
  for (const auto& d : dets) {
    const auto& p = predictions[d.image][d.index];
    double best = -1.0;
    std::size_t best_k = 0;
    const auto& gts = ground_truth[d.image];
    for (std::size_t k = 0; k < gts.size(); ++k) {
      if (gts[k].c != cls) continue;
      const double o = iou(p, gts[k]);
      if (o > best) {
        best = o;
        best_k = k;
      }
    }
    if (best >= iou_threshold && !claimed[d.image][best_k]) {
      claimed[d.image][best_k] = true;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(npos));
  }

  if (interp == ApInterpolation::kElevenPoint) {
    double ap = 0.0;
    for (int t = 0; t <= 10; ++t) {
      const double r = t / 10.0;
      double pmax = 0.0;
      for (std::size_t i = 0; i < recall.size(); ++i)
        if (recall[i] >= r - 1e-12) pmax = std::max(pmax, precision[i]);
      ap += pmax / 11.0;
    }
    return ap;
  }

  // precision envelope, then area under the recall steps
  std::vector<double> mrec{0.0}, mpre{0.0};
  mrec.insert(mrec.end(), recall.begin(), recall.end());
  mpre.insert(mpre.end(), precision.begin(), precision.end());
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i-- > 0;) mpre[i] = std::max(mpre[i], mpre[i + 1]);
  double ap = 0.0;
  for (std::size_t i = 1; i < mrec.size(); ++i)
    if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  return ap;
}

double mean_average_precision(const ImageBoxes& predictions, const ImageBoxes& ground_truth, int num_classes,
                              double iou_threshold, ApInterpolation interp) {
  double sum = 0.0;
  int count = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (auto ap = average_precision(predictions, ground_truth, c, iou_threshold, interp)) {
      sum += *ap;
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / count;
}

std::optional<double> oda_detected_fraction(const ImageBoxes& predictions, const ImageBoxes& ground_truth,
                                            double iou_threshold, double conf_threshold) {
  check_shapes(predictions, ground_truth);
  std::size_t total = 0, detected = 0;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    for (const auto& g : ground_truth[i]) {
      ++total;
      const bool found = std::any_of(predictions[i].begin(), predictions[i].end(), [&](const BoundingBox& p) {
        return p.c == g.c && *p.confidence >= conf_threshold && iou(p, g) >= iou_threshold;
      });
      detected += found ? 1 : 0;
    }
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(detected) / static_cast<double>(total);
}

std::optional<double> oda_asr(const ImageBoxes& predictions, const ImageBoxes& ground_truth, double iou_threshold,
                              double conf_threshold) {
  const auto detected = oda_detected_fraction(predictions, ground_truth, iou_threshold, conf_threshold);
  if (!detected) return std::nullopt;
  return 1.0 - *detected;
}

std::optional<double> gma_asr(const ImageBoxes& predictions, const ImageBoxes& ground_truth, int target,
                              double iou_threshold, double conf_threshold) {
  check_shapes(predictions, ground_truth);
  std::size_t total = 0, matched = 0;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    const auto& gts = ground_truth[i];
    std::vector<bool> claimed(gts.size(), false);
    for (const auto& g : gts) total += g.c != target ? 1 : 0;
    const ImageBoxes one{predictions[i]};
    for (const auto& ref : sorted_by_confidence(one, target, conf_threshold)) {
      const auto& p = predictions[i][ref.index];
      double best = -1.0;
      std::size_t best_k = 0;
      for (std::size_t k = 0; k < gts.size(); ++k) {
        if (gts[k].c == target || claimed[k]) continue;
        const double o = iou(p, gts[k]);
        if (o > best) {
          best = o;
          best_k = k;
        }
      }
      if (best >= iou_threshold) {
        claimed[best_k] = true;
        ++matched;
      }
    }
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(matched) / static_cast<double>(total);
}

EvalReport eval_detection(const ImageBoxes& clean_predictions, const ImageBoxes& clean_ground_truth,
                          const ImageBoxes& poisoned_predictions, const ImageBoxes& poisoned_ground_truth,
                          const labels::DetectionPoisonMode& mode, int num_classes,
                          const DetectionEvalConfig& config) {
  mode.validate(num_classes);
  EvalReport r;
  r.task = mode.mode == labels::DetectionAttack::kOda ? Task::kDetectionOda : Task::kDetectionGma;
  r.clean_count = clean_ground_truth.size();
  r.poisoned_count = poisoned_ground_truth.size();
  r.c_acc = mean_average_precision(clean_predictions, clean_ground_truth, num_classes, config.iou_threshold,
                                   config.interpolation);
  if (!poisoned_ground_truth.empty()) {
    r.r_acc = mean_average_precision(poisoned_predictions, poisoned_ground_truth, num_classes, config.iou_threshold,
                                     config.interpolation);
    r.asr = mode.mode == labels::DetectionAttack::kOda
                ? oda_asr(poisoned_predictions, poisoned_ground_truth, config.iou_threshold, config.conf_threshold)
                : gma_asr(poisoned_predictions, poisoned_ground_truth, *mode.target_class, config.iou_threshold,
                          config.conf_threshold);
    if (!r.asr) r.r_acc.reset();
  }
  return r;
}

}  // namespace vssc::eval
