#include "vssc/labels/detection.hpp"

#include <unordered_map>

#include "vssc/core/errors.hpp"

namespace vssc::labels {

void DetectionPoisonMode::validate(int num_classes) const {
  if (mode == DetectionAttack::kGma) {
    if (!target_class) throw ConfigError("GMA needs a target class");
    if (*target_class < 0 || *target_class >= num_classes) throw ConfigError("GMA target class out of range");
  }
}

std::string attack_name(DetectionAttack mode) { return mode == DetectionAttack::kOda ? "oda" : "gma"; }

std::vector<BoundingBox> oda_transform(const std::vector<BoundingBox>& boxes) {
  auto out = boxes;
  for (auto& b : out) {
    b.w = 0.0;
    b.h = 0.0;
  }
  return out;
}

std::vector<BoundingBox> gma_transform(const std::vector<BoundingBox>& boxes, int target) {
  auto out = boxes;
  for (auto& b : out) b.c = target;
  return out;
}

std::vector<BoundingBox> apply_mode(const std::vector<BoundingBox>& boxes, const DetectionPoisonMode& mode) {
  if (mode.mode == DetectionAttack::kOda) return oda_transform(boxes);
  if (!mode.target_class) throw ConfigError("GMA needs a target class");
  return gma_transform(boxes, *mode.target_class);
}

DetectionDataset poison_detection_dataset(const DetectionDataset& dataset,
                                          const std::vector<std::pair<std::string, ImageBuffer>>& poisoned,
                                          const DetectionPoisonMode& mode) {
  mode.validate(dataset.num_classes);
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) by_id.emplace(dataset.samples[i].id, i);
  DetectionDataset out = dataset;
  std::vector<bool> done(dataset.samples.size(), false);
  for (const auto& [id, image] : poisoned) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ConfigError("poisoned id '" + id + "' not in dataset");
    if (done[it->second]) throw ConfigError("duplicate poisoned id '" + id + "'");
    done[it->second] = true;
    auto& s = out.samples[it->second];
    if (!image.same_shape(s.image)) throw DimensionError("poisoned image for '" + id + "' changes the image shape");
    s.image = image;
    s.boxes = apply_mode(s.boxes, mode);
  }
  return out;
}

}  // namespace vssc::labels
