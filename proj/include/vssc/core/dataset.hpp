#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vssc/core/image.hpp"

namespace vssc {

enum class Split { kTrain, kTest };

struct Sample {
  std::string id;
  ImageBuffer image;
  int label = 0;
};

// [a, b, w, h, c]: top-left corner, size, class. Confidence is set on
// predictions only.
struct BoundingBox {
  double a = 0.0;
  double b = 0.0;
  double w = 0.0;
  double h = 0.0;
  int c = 0;
  std::optional<double> confidence;

  double area() const { return w * h; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Clip a box to [0,width) x [0,height); w and h shrink accordingly.
BoundingBox clamp_to_image(const BoundingBox& box, int height, int width);

struct DetectionSample {
  std::string id;
  ImageBuffer image;
  std::vector<BoundingBox> boxes;
};

struct LabeledDataset {
  std::vector<Sample> samples;
  int num_classes = 0;
  Split split = Split::kTrain;

  std::size_t size() const { return samples.size(); }
  // Throws ConfigError on duplicate ids or out-of-range labels.
  void validate() const;
};

struct DetectionDataset {
  std::vector<DetectionSample> samples;
  int num_classes = 0;
  Split split = Split::kTrain;
};

struct AttackConfig {
  int target_label = 0;
  double poisoning_ratio = 0.0;
  double oversample_factor = 1.5;
  int max_attempts = 3;
  std::uint64_t seed = 0;
  // Classes never poisoned (for high-diversity datasets where the trigger is
  // incompatible with some classes).
  std::vector<int> excluded_classes;

  void validate() const;
};

struct CriterionAnswer {
  std::string criterion;
  bool yes = false;
  std::string raw;
};

struct QaVerdict {
  bool pass = false;
  std::vector<CriterionAnswer> answers;
  std::string error;  // nonempty when the client failed
};

struct AttemptRecord {
  int attempt_index = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> backend_args;
  std::string backend_error;        // insertion failure, empty on success
  std::optional<QaVerdict> verdict;  // absent when QA was bypassed or insertion failed
};

enum class PoisonStatus { kPoisoned, kDiscarded };

struct PoisonRecord {
  std::string sample_id;
  std::size_t sample_index = 0;
  std::string trigger;  // canonical trigger description
  int attempts_used = 0;
  std::vector<AttemptRecord> attempts;
  PoisonStatus final_status = PoisonStatus::kDiscarded;
  std::uint64_t seed = 0;
};

struct PoisonManifest {
  std::vector<PoisonRecord> records;
  std::size_t dataset_size = 0;
  int target_label = 0;
  double target_ratio = 0.0;
  double actual_ratio = 0.0;
  std::string dataset_fingerprint;
  bool undersized = false;   // eligible pool smaller than requested
  bool zero_poisoned = false;

  std::size_t poisoned_count() const;
};

struct IndexSelection {
  std::vector<std::size_t> indices;  // attempt order
  std::size_t requested = 0;
  bool undersized = false;
};

// Candidate count floor(r * oversample * n), drawn uniformly without
// replacement from samples whose label is neither the target nor excluded.
IndexSelection select_poison_indices(const LabeledDataset& dataset, const AttackConfig& config);

// floor(r * n): the number of samples that end up poisoned when every
// candidate succeeds.
std::size_t target_poison_count(std::size_t n, double ratio);

// Replaces poisoned images, relabels them to the target and records the
// actual ratio. `records` (when supplied) become the manifest's records;
// otherwise one bypass record is synthesized per poisoned sample.
std::pair<LabeledDataset, PoisonManifest> assemble_poisoned_dataset(
    const LabeledDataset& dataset,
    const std::vector<std::pair<std::string, ImageBuffer>>& poisoned,
    const AttackConfig& config,
    std::vector<PoisonRecord> records = {});

std::string dataset_fingerprint(const LabeledDataset& dataset);
std::string dataset_fingerprint(const DetectionDataset& dataset);

}  // namespace vssc
