#include "vssc/pipeline/insertion.hpp"

#include "vssc/core/errors.hpp"

namespace vssc::pipeline {

const char* const kDefaultEditPrompt = "Add a ${trigger} to the image, keeping the rest of the scene unchanged.";

namespace {

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

bool has_placeholder(const std::string& s) {
  return s.find("[trigger]") != std::string::npos || s.find("${trigger}") != std::string::npos;
}

}  // namespace

std::string render_trigger_template(const std::string& tmpl, const std::string& trigger) {
  std::string out = tmpl;
  replace_all(out, "[trigger]", trigger);
  replace_all(out, "${trigger}", trigger);
  return out;
}

void QualityCriteria::validate() const {
  if (templates.empty()) throw ConfigError("quality criteria: at least one template is required");
  for (const auto& t : templates)
    if (!has_placeholder(t)) throw ConfigError("quality criterion lacks a [trigger] placeholder: " + t);
}

InsertionAttempt insert_trigger(const ImageBuffer& image, const TriggerSpec& trigger, int attempt_index,
                                std::uint64_t seed, services::EditBackend& backend,
                                const std::string& prompt_template) {
  if (!trigger.is_semantic()) throw ConfigError("insert_trigger needs a semantic trigger");
  InsertionAttempt attempt;
  attempt.attempt_index = attempt_index;
  attempt.seed = seed;

  services::EditRequest req;
  req.image = image;
  req.trigger = trigger.text;
  req.prompt = render_trigger_template(prompt_template, trigger.text);
  req.seed = seed;
  req.args = {{"attempt", std::to_string(attempt_index)}, {"seed", std::to_string(seed)}};

  services::EditResponse resp;
  try {
    resp = backend.edit(req);
  } catch (const std::exception& e) {
    attempt.error = std::string("backend threw: ") + e.what();
    attempt.backend_args = req.args;
    return attempt;
  }
  attempt.backend_args = resp.recorded_args.empty() ? req.args : resp.recorded_args;
  attempt.metadata = resp.metadata;
  if (!resp.ok()) {
    attempt.error = resp.error.empty() ? "backend returned no image" : resp.error;
    return attempt;
  }
  if (!resp.image->same_shape(image)) {
    attempt.error = "backend changed image dimensions";
    return attempt;
  }
  attempt.result = std::move(resp.image);
  return attempt;
}

std::string criterion_question(const std::string& rendered_criterion) {
  return "Is it true that " + rendered_criterion + "? Answer yes or no.";
}

QaVerdict assess_quality(const ImageBuffer& image, const std::optional<services::CompositeMetadata>& metadata,
                         const TriggerSpec& trigger, const QualityCriteria& criteria, services::VqaClient& qa) {
  if (!trigger.is_semantic()) throw ConfigError("assess_quality needs a semantic trigger");
  QaVerdict verdict;
  verdict.pass = true;
  for (const auto& tmpl : criteria.templates) {
    const std::string rendered = render_trigger_template(tmpl, trigger.text);
    CriterionAnswer ans;
    ans.criterion = rendered;
    services::VqaResponse resp;
    try {
      resp = qa.ask({image, criterion_question(rendered), metadata});
    } catch (const std::exception& e) {
      resp.answer = services::Answer::kNo;
      resp.error = e.what();
    }
    ans.raw = resp.raw;
    ans.yes = resp.ok() && resp.answer == services::Answer::kYes;
    if (!resp.ok() && verdict.error.empty()) verdict.error = resp.error;
    verdict.pass = verdict.pass && ans.yes;
    verdict.answers.push_back(std::move(ans));
  }
  return verdict;
}

}  // namespace vssc::pipeline
