#pragma once

#include <optional>
#include <vector>

#include "vssc/core/dataset.hpp"
#include "vssc/eval/report.hpp"
#include "vssc/labels/detection.hpp"

namespace vssc::eval {

using ImageBoxes = std::vector<std::vector<BoundingBox>>;  // per image

double iou(const BoundingBox& x, const BoundingBox& y);

enum class ApInterpolation { kAllPoint, kElevenPoint };

// VOC-style AP for one class: detections sorted by descending confidence
// (stable), each matched to the highest-IoU ground truth of its image; a
// match below the IoU threshold or to an already claimed box is a false
// positive. Returns nullopt when the class has no ground truth.
std::optional<double> average_precision(const ImageBoxes& predictions, const ImageBoxes& ground_truth, int cls,
                                         double iou_threshold = 0.5,
                                         ApInterpolation interp = ApInterpolation::kAllPoint);

// Mean over classes that have ground truth; 0 when none do.
double mean_average_precision(const ImageBoxes& predictions, const ImageBoxes& ground_truth, int num_classes,
                              double iou_threshold = 0.5, ApInterpolation interp = ApInterpolation::kAllPoint);

// Fraction of ground-truth boxes with no same-class prediction at IoU >= iou
// and confidence >= conf.
std::optional<double> oda_asr(const ImageBoxes& predictions, const ImageBoxes& ground_truth,
                              double iou_threshold = 0.5, double conf_threshold = 0.5);
std::optional<double> oda_detected_fraction(const ImageBoxes& predictions, const ImageBoxes& ground_truth,
                                            double iou_threshold = 0.5, double conf_threshold = 0.5);

// Fraction of non-target ground-truth boxes matched one-to-one (greedy by
// descending confidence) by a target-labeled prediction.
std::optional<double> gma_asr(const ImageBoxes& predictions, const ImageBoxes& ground_truth, int target,
                              double iou_threshold = 0.5, double conf_threshold = 0.5);

struct DetectionEvalConfig {
  double iou_threshold = 0.5;
  double conf_threshold = 0.5;
  ApInterpolation interpolation = ApInterpolation::kAllPoint;
};

// C-Acc = clean mAP, R-Acc = mAP of poisoned-image predictions against the
// original boxes, ASR per mode.
EvalReport eval_detection(const ImageBoxes& clean_predictions, const ImageBoxes& clean_ground_truth,
                          const ImageBoxes& poisoned_predictions, const ImageBoxes& poisoned_ground_truth,
                          const labels::DetectionPoisonMode& mode, int num_classes,
                          const DetectionEvalConfig& config = {});

}  // namespace vssc::eval
