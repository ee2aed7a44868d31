#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vssc/core/dataset.hpp"
#include "vssc/services/clients.hpp"
#include "vssc/triggers/trigger_spec.hpp"

namespace vssc::pipeline {

extern const char* const kDefaultEditPrompt;

// Replaces every "[trigger]" / "${trigger}" occurrence.
std::string render_trigger_template(const std::string& tmpl, const std::string& trigger);

struct QualityCriteria {
  std::vector<std::string> templates{"[trigger] exists in the image", "[trigger] is compatible with the background"};

  void validate() const;
};

struct InsertionAttempt {
  int attempt_index = 0;
  std::uint64_t seed = 0;
  services::BackendArgs backend_args;
  std::optional<ImageBuffer> result;
  std::optional<services::CompositeMetadata> metadata;
  std::string error;

  bool ok() const { return result.has_value() && error.empty(); }
};

// Asks the backend for one edit. Failures are carried in the returned attempt.
InsertionAttempt insert_trigger(const ImageBuffer& image, const TriggerSpec& trigger, int attempt_index,
                                std::uint64_t seed, services::EditBackend& backend,
                                const std::string& prompt_template = kDefaultEditPrompt);

// Question posed to the VQA client for one rendered criterion.
std::string criterion_question(const std::string& rendered_criterion);

// One query per criterion; passes only if every answer is yes.
QaVerdict assess_quality(const ImageBuffer& image, const std::optional<services::CompositeMetadata>& metadata,
                         const TriggerSpec& trigger, const QualityCriteria& criteria, services::VqaClient& qa);

}  // namespace vssc::pipeline
