#include "vssc/pipeline/generation.hpp"

#include <algorithm>
#include <future>

#include "vssc/core/errors.hpp"
#include "vssc/core/random.hpp"

namespace vssc::pipeline {

std::uint64_t record_seed(std::uint64_t attack_seed, std::size_t sample_index) {
  return derive_seed(derive_seed(attack_seed, "poison_record"), sample_index);
}

std::uint64_t attempt_seed(std::uint64_t rec_seed, int attempt_index) {
  return derive_seed(rec_seed, static_cast<std::uint64_t>(attempt_index));
}

namespace {

struct SampleOutcome {
  PoisonRecord record;
  std::optional<ImageBuffer> image;
};

struct LoopResult {
  std::optional<ImageBuffer> image;
  std::vector<AttemptRecord> attempts;
};

LoopResult insert_assess_loop(const ImageBuffer& image, const TriggerSpec& trigger, const QualityCriteria& criteria,
                              services::EditBackend& backend, services::VqaClient& qa, int max_attempts,
                              std::uint64_t rec_seed, const GenerationOptions& options) {
  LoopResult out;
  for (int a = 0; a < max_attempts; ++a) {
    AttemptRecord rec;
    rec.attempt_index = a;
    rec.seed = attempt_seed(rec_seed, a);
    auto attempt = insert_trigger(image, trigger, a, rec.seed, backend, options.edit_prompt_template);
    rec.backend_args = attempt.backend_args;
    if (!attempt.ok()) {
      rec.backend_error = attempt.error;
      out.attempts.push_back(std::move(rec));
      continue;
    }
    bool pass = true;
    if (options.qa_enabled) {
      rec.verdict = assess_quality(*attempt.result, attempt.metadata, trigger, criteria, qa);
      pass = rec.verdict->pass;
    }
    out.attempts.push_back(std::move(rec));
    if (pass) {
      out.image = std::move(attempt.result);
      break;
    }
  }
  return out;
}

}  // namespace

GenerationResult generate_poisoned_dataset(const LabeledDataset& dataset, const TriggerSpec& trigger,
                                           const AttackConfig& config, const QualityCriteria& criteria,
                                           services::EditBackend& backend, services::VqaClient& qa,
                                           const GenerationOptions& options) {
  config.validate();
  trigger.validate();
  if (!trigger.is_semantic()) throw ConfigError("generate_poisoned_dataset needs a semantic trigger");
  if (options.qa_enabled) criteria.validate();
  if (options.parallelism < 1) throw ConfigError("parallelism must be at least 1");

  const auto selection = select_poison_indices(dataset, config);
  const std::size_t target = target_poison_count(dataset.size(), config.poisoning_ratio);
  const std::string trigger_name = trigger.describe();

  auto run_one = [&](std::size_t index) {
    SampleOutcome o;
    const auto& sample = dataset.samples[index];
    o.record.sample_id = sample.id;
    o.record.sample_index = index;
    o.record.trigger = trigger_name;
    o.record.seed = record_seed(config.seed, index);
    auto loop = insert_assess_loop(sample.image, trigger, criteria, backend, qa, config.max_attempts, o.record.seed,
                                   options);
    o.record.attempts = std::move(loop.attempts);
    o.record.attempts_used = static_cast<int>(o.record.attempts.size());
    o.record.final_status = loop.image ? PoisonStatus::kPoisoned : PoisonStatus::kDiscarded;
    o.image = std::move(loop.image);
    return o;
  };

  std::vector<PoisonRecord> records;
  std::vector<std::pair<std::string, ImageBuffer>> poisoned;
  std::size_t next = 0;
  while (poisoned.size() < target && next < selection.indices.size()) {
    // Never launch more tasks than successes still needed, so the merged
    // result does not depend on the parallelism bound.
    const std::size_t window = std::min({static_cast<std::size_t>(options.parallelism), target - poisoned.size(),
                                         selection.indices.size() - next});
    std::vector<SampleOutcome> outcomes;
    if (window == 1) {
      outcomes.push_back(run_one(selection.indices[next]));
    } else {
      std::vector<std::future<SampleOutcome>> futures;
      for (std::size_t k = 0; k < window; ++k)
        futures.push_back(std::async(std::launch::async, run_one, selection.indices[next + k]));
      for (auto& f : futures) outcomes.push_back(f.get());
    }
    next += window;
    for (auto& o : outcomes) {
      if (o.image) poisoned.emplace_back(o.record.sample_id, std::move(*o.image));
      records.push_back(std::move(o.record));
    }
  }

  auto [out, manifest] = assemble_poisoned_dataset(dataset, poisoned, config, std::move(records));
  manifest.undersized = selection.undersized;
  GenerationResult result{std::move(out), std::move(manifest), false};
  result.warning = result.manifest.zero_poisoned;
  return result;
}

GenerationResult poison_with_baseline(const LabeledDataset& dataset, const TriggerSpec& trigger,
                                      const AttackConfig& config) {
  config.validate();
  trigger.validate();
  if (trigger.is_semantic() || !trigger.baseline) throw ConfigError("poison_with_baseline needs a baseline trigger");
  const auto selection = select_poison_indices(dataset, config);
  const std::size_t target =
      std::min(target_poison_count(dataset.size(), config.poisoning_ratio), selection.indices.size());
  const std::string trigger_name = trigger.describe();

  std::vector<PoisonRecord> records;
  std::vector<std::pair<std::string, ImageBuffer>> poisoned;
  for (std::size_t k = 0; k < target; ++k) {
    const std::size_t index = selection.indices[k];
    const auto& sample = dataset.samples[index];
    poisoned.emplace_back(sample.id, apply_baseline(sample.image, *trigger.baseline));
    PoisonRecord rec;
    rec.sample_id = sample.id;
    rec.sample_index = index;
    rec.trigger = trigger_name;
    rec.seed = record_seed(config.seed, index);
    rec.attempts_used = 1;
    AttemptRecord att;
    att.seed = rec.seed;
    att.backend_args = {{"baseline", baseline_name(*trigger.baseline)}};
    rec.attempts.push_back(std::move(att));
    rec.final_status = PoisonStatus::kPoisoned;
    records.push_back(std::move(rec));
  }
  auto [out, manifest] = assemble_poisoned_dataset(dataset, poisoned, config, std::move(records));
  manifest.undersized = selection.undersized;
  GenerationResult result{std::move(out), std::move(manifest), false};
  result.warning = result.manifest.zero_poisoned;
  return result;
}

InferencePoison poison_inference_image(const ImageBuffer& image, const TriggerSpec& trigger,
                                       const QualityCriteria& criteria, services::EditBackend& backend,
                                       services::VqaClient& qa, int max_attempts, std::uint64_t seed,
                                       const GenerationOptions& options) {
  if (!trigger.is_semantic()) throw ConfigError("poison_inference_image needs a semantic trigger");
  if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
  if (options.qa_enabled) criteria.validate();
  auto loop = insert_assess_loop(image, trigger, criteria, backend, qa, max_attempts, seed, options);
  InferencePoison out;
  out.backend_calls = static_cast<int>(loop.attempts.size());
  out.attempts = std::move(loop.attempts);
  out.image = std::move(loop.image);
  return out;
}

ReplayReport replay_manifest(const LabeledDataset& clean, const LabeledDataset& poisoned,
                             const PoisonManifest& manifest, const TriggerSpec& trigger,
                             services::EditBackend* backend, const std::string& prompt_template) {
  if (clean.size() != poisoned.size()) throw ConfigError("replay: clean and poisoned datasets differ in size");
  if (manifest.dataset_size != clean.size()) throw ConfigError("replay: manifest was built for another dataset");
  if (trigger.is_semantic() && backend == nullptr) throw ConfigError("replay: a semantic trigger needs a backend");
  ReplayReport report;
  for (const auto& rec : manifest.records) {
    if (rec.final_status != PoisonStatus::kPoisoned) continue;
    if (rec.sample_index >= clean.size() || clean.samples[rec.sample_index].id != rec.sample_id)
      throw ConfigError("replay: record '" + rec.sample_id + "' does not match the dataset");
    if (rec.attempts.empty()) throw ConfigError("replay: record '" + rec.sample_id + "' has no attempts");
    const auto& src = clean.samples[rec.sample_index].image;
    std::optional<ImageBuffer> regenerated;
    if (trigger.is_semantic()) {
      const auto& last = rec.attempts.back();
      auto attempt = insert_trigger(src, trigger, last.attempt_index, last.seed, *backend, prompt_template);
      regenerated = std::move(attempt.result);
    } else {
      regenerated = apply_baseline(src, *trigger.baseline);
    }
    ++report.checked;
    if (!regenerated || !(*regenerated == poisoned.samples[rec.sample_index].image))
      report.mismatched.push_back(rec.sample_id);
  }
  return report;
}

}  // namespace vssc::pipeline
