#include "vssc/pipeline/selection.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "vssc/core/errors.hpp"
#include "vssc/core/random.hpp"

namespace vssc::pipeline {

const char* const kDefaultSelectionInstruction =
    "I have a dataset that contains images of different classes, including ${classes}. Now, I would like to "
    "naturally insert a simple and real object into all of these images, which can reasonably and commonly appear "
    "with the categories. The requirement is that this object should be able to naturally appear in all categories "
    "of pictures, and the addition should look harmonious. In addition, the inserted object and the original object "
    "cannot be the same class. Give me a list of objects that can be inserted.";

std::string status_name(CandidateStatus s) {
  switch (s) {
    case CandidateStatus::kCandidate: return "candidate";
    case CandidateStatus::kQualified: return "qualified";
    case CandidateStatus::kRejected: return "rejected";
  }
  return "candidate";
}

void SelectionConfig::validate() const {
  if (!(isr_threshold > 0.0 && isr_threshold <= 1.0)) throw ConfigError("isr_threshold must lie in (0, 1]");
  if (eval_images_per_class <= 0) throw ConfigError("eval_images_per_class must be positive");
}

namespace {

std::string normalize_item(std::string item) {
  for (auto& ch : item) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  // leading list markers: "1.", "2)", "-", "*", "•"
  std::size_t i = 0;
  while (i < item.size() && (std::isspace(static_cast<unsigned char>(item[i])) || item[i] == '-' || item[i] == '*'))
    ++i;
  std::size_t j = i;
  while (j < item.size() && std::isdigit(static_cast<unsigned char>(item[j]))) ++j;
  if (j > i && j < item.size() && (item[j] == '.' || item[j] == ')')) i = j + 1;
  std::string out;
  bool space = false;
  for (std::size_t k = i; k < item.size(); ++k) {
    const auto ch = static_cast<unsigned char>(item[k]);
    if (std::isalnum(ch) || ch == '\'') {
      if (space && !out.empty()) out.push_back(' ');
      space = false;
      out.push_back(static_cast<char>(ch));
    } else if (std::isspace(ch) || ch == '-' || ch == '_') {
      space = true;
    }
    // other punctuation and non-ASCII bytes are dropped
  }
  return out;
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> parse_candidate_list(const std::string& reply) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::string cur;
  auto flush = [&] {
    auto item = normalize_item(cur);
    cur.clear();
    if (!item.empty() && seen.insert(item).second) out.push_back(std::move(item));
  };
  for (char ch : reply) {
    if (ch == ',' || ch == ';' || ch == '\n' || ch == '\r') {
      flush();
    } else {
      cur.push_back(ch);
    }
  }
  flush();
  return out;
}

CoarseSelection coarse_select(const std::vector<std::string>& class_names, const SelectionConfig& config,
                              services::ChatClient& chat) {
  if (class_names.empty()) throw ConfigError("coarse_select: class_names is empty");
  CoarseSelection sel;
  sel.prompt = config.instruction_template;
  const std::string classes = join(class_names, ", ");
  for (const std::string key : {"${classes}", "[classes]"}) {
    std::size_t pos = 0;
    while ((pos = sel.prompt.find(key, pos)) != std::string::npos) {
      sel.prompt.replace(pos, key.size(), classes);
      pos += classes.size();
    }
  }
  services::ChatRequest req;
  req.user = sel.prompt;
  req.seed = config.seed;
  services::ChatResponse resp;
  try {
    resp = chat.complete(req);
  } catch (const std::exception& e) {
    resp.error = e.what();
  }
  if (!resp.ok()) {
    sel.error = resp.error.empty() ? "chat request failed" : resp.error;
    sel.raw_reply = resp.text;
    return sel;
  }
  sel.raw_reply = resp.text;
  for (auto& text : parse_candidate_list(resp.text)) {
    TriggerCandidate cand;
    cand.text = std::move(text);
    sel.candidates.push_back(std::move(cand));
  }
  return sel;
}

std::vector<std::size_t> build_evaluation_set(const LabeledDataset& dataset, const SelectionConfig& config) {
  config.validate();
  if (dataset.num_classes <= 0) throw ConfigError("dataset has no classes");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(dataset.num_classes));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const int label = dataset.samples[i].label;
    if (label < 0 || label >= dataset.num_classes) throw ConfigError("label out of range");
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }
  const auto per = static_cast<std::size_t>(config.eval_images_per_class);
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& pool = by_class[c];
    if (pool.size() < per)
      throw ConfigError("class " + std::to_string(c) + " has fewer than " + std::to_string(per) +
                        " images for trigger evaluation");
    Rng rng(derive_seed(derive_seed(config.seed, "evaluation_set"), c));
    rng.shuffle(pool.begin(), pool.end());
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(per));
  }
  return out;
}

std::vector<TriggerCandidate> fine_select(const std::vector<TriggerCandidate>& candidates,
                                          const LabeledDataset& dataset, const SelectionConfig& config,
                                          const QualityCriteria& criteria, services::EditBackend& inserter,
                                          services::VqaClient& qa) {
  if (candidates.empty()) throw ConfigError("fine_select: no candidates");
  criteria.validate();
  const auto eval = build_evaluation_set(dataset, config);
  std::vector<TriggerCandidate> out;
  out.reserve(candidates.size());
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    TriggerCandidate cand = candidates[ci];
    const auto trigger = TriggerSpec::semantic(cand.text, inserter.id());
    const auto cand_seed = derive_seed(derive_seed(config.seed, "fine_select"), cand.text);
    int passed = 0;
    for (std::size_t k = 0; k < eval.size(); ++k) {
      const auto& img = dataset.samples[eval[k]].image;
      auto attempt = insert_trigger(img, trigger, 0, derive_seed(cand_seed, k), inserter,
                                    config.edit_prompt_template);
      if (!attempt.ok()) continue;
      if (assess_quality(*attempt.result, attempt.metadata, trigger, criteria, qa).pass) ++passed;
    }
    cand.passed = passed;
    cand.evaluated = static_cast<int>(eval.size());
    cand.isr = static_cast<double>(passed) / static_cast<double>(eval.size());
    cand.status = *cand.isr >= config.isr_threshold ? CandidateStatus::kQualified : CandidateStatus::kRejected;
    out.push_back(std::move(cand));
  }
  return out;
}

}  // namespace vssc::pipeline
