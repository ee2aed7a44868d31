#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vssc/core/dataset.hpp"

namespace vssc::labels {

enum class DetectionAttack { kOda, kGma };

struct DetectionPoisonMode {
  DetectionAttack mode = DetectionAttack::kOda;
  std::optional<int> target_class;  // GMA only

  static DetectionPoisonMode oda() { return {DetectionAttack::kOda, std::nullopt}; }
  static DetectionPoisonMode gma(int target) { return {DetectionAttack::kGma, target}; }

  void validate(int num_classes) const;
};

std::string attack_name(DetectionAttack mode);

// Boxes vanish: width and height become zero, position and class are kept.
std::vector<BoundingBox> oda_transform(const std::vector<BoundingBox>& boxes);

// Every box is relabeled to the target; geometry is untouched.
std::vector<BoundingBox> gma_transform(const std::vector<BoundingBox>& boxes, int target);

std::vector<BoundingBox> apply_mode(const std::vector<BoundingBox>& boxes, const DetectionPoisonMode& mode);

// Replaces the images of the given ids and rewrites their boxes per `mode`.
// Images left without boxes are kept.
DetectionDataset poison_detection_dataset(const DetectionDataset& dataset,
                                          const std::vector<std::pair<std::string, ImageBuffer>>& poisoned,
                                          const DetectionPoisonMode& mode);

}  // namespace vssc::labels
