#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vssc/core/dataset.hpp"
#include "vssc/pipeline/insertion.hpp"

namespace vssc::pipeline {

struct GenerationOptions {
  int parallelism = 1;  // concurrent per-sample tasks; clients must allow it
  bool qa_enabled = true;
  std::string edit_prompt_template = kDefaultEditPrompt;
};

struct GenerationResult {
  LabeledDataset dataset;
  PoisonManifest manifest;
  bool warning = false;  // nothing could be poisoned
};

// Per-record and per-attempt seeds; replay depends on these staying fixed.
std::uint64_t record_seed(std::uint64_t attack_seed, std::size_t sample_index);
std::uint64_t attempt_seed(std::uint64_t record_seed, int attempt_index);

// Stage I: walk the candidate order, give each sample up to max_attempts
// insert->assess rounds, stop once floor(r*n) samples are poisoned.
GenerationResult generate_poisoned_dataset(const LabeledDataset& dataset, const TriggerSpec& trigger,
                                           const AttackConfig& config, const QualityCriteria& criteria,
                                           services::EditBackend& backend, services::VqaClient& qa,
                                           const GenerationOptions& options = {});

// Baseline triggers are deterministic pixel transforms and skip QA: the first
// floor(r*n) candidates are poisoned.
GenerationResult poison_with_baseline(const LabeledDataset& dataset, const TriggerSpec& trigger,
                                      const AttackConfig& config);

struct InferencePoison {
  std::optional<ImageBuffer> image;
  int backend_calls = 0;
  std::vector<AttemptRecord> attempts;
};

// Stage III: the same insert->assess loop for one test image.
InferencePoison poison_inference_image(const ImageBuffer& image, const TriggerSpec& trigger,
                                       const QualityCriteria& criteria, services::EditBackend& backend,
                                       services::VqaClient& qa, int max_attempts, std::uint64_t seed,
                                       const GenerationOptions& options = {});

struct ReplayReport {
  std::size_t checked = 0;
  std::vector<std::string> mismatched;  // ids whose regenerated bytes differ

  bool identical() const { return mismatched.empty(); }
};

// Regenerates every poisoned record from its recorded seed and compares the
// bytes with `poisoned`. `clean` is the dataset the manifest was built from.
ReplayReport replay_manifest(const LabeledDataset& clean, const LabeledDataset& poisoned,
                             const PoisonManifest& manifest, const TriggerSpec& trigger,
                             services::EditBackend* backend,
                             const std::string& prompt_template = kDefaultEditPrompt);

}  // namespace vssc::pipeline
