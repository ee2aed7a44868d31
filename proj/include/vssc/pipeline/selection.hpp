#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vssc/core/dataset.hpp"
#include "vssc/pipeline/insertion.hpp"
#include "vssc/services/clients.hpp"

namespace vssc::pipeline {

enum class CandidateStatus { kCandidate, kQualified, kRejected };

std::string status_name(CandidateStatus s);

struct TriggerCandidate {
  std::string text;
  std::optional<double> isr;
  CandidateStatus status = CandidateStatus::kCandidate;
  int passed = 0;
  int evaluated = 0;
};

// Default coarse-selection instruction; ${classes} expands to the
// comma-separated class names.
extern const char* const kDefaultSelectionInstruction;

struct SelectionConfig {
  double isr_threshold = 0.5;
  int eval_images_per_class = 15;
  std::string instruction_template = kDefaultSelectionInstruction;
  std::string edit_prompt_template = kDefaultEditPrompt;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CoarseSelection {
  std::vector<TriggerCandidate> candidates;
  std::string prompt;
  std::string raw_reply;  // kept for audit, including unparseable replies
  std::string error;      // chat failure, if any
};

// Lowercase, strip list markers and punctuation, split on commas, semicolons
// and newlines, drop duplicates (first occurrence wins).
std::vector<std::string> parse_candidate_list(const std::string& reply);

CoarseSelection coarse_select(const std::vector<std::string>& class_names, const SelectionConfig& config,
                              services::ChatClient& chat);

// Seeded evaluation set: eval_images_per_class indices from every class
// (target class included), grouped by class.
std::vector<std::size_t> build_evaluation_set(const LabeledDataset& dataset, const SelectionConfig& config);

// One insertion attempt per evaluation image; ISR = QA passes / images.
// Insertion failures count as QA failures.
std::vector<TriggerCandidate> fine_select(const std::vector<TriggerCandidate>& candidates,
                                          const LabeledDataset& dataset, const SelectionConfig& config,
                                          const QualityCriteria& criteria, services::EditBackend& inserter,
                                          services::VqaClient& qa);

}  // namespace vssc::pipeline
