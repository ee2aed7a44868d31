#pragma once

// Deterministic backends for pipeline tests. Sample identity travels in the
// first pixel of each image so QA stubs can key decisions on it.

#include <functional>
#include <map>
#include <mutex>
#include <string>

#include "vssc/core/dataset.hpp"
#include "vssc/services/clients.hpp"

namespace vssc::testing {

inline int encoded_index(const ImageBuffer& img) { return img.at(0, 0, 0) + 256 * img.at(0, 0, 1); }

// n samples of h x h RGB, label i % classes, index stamped into pixel (0,0).
inline LabeledDataset indexed_dataset(std::size_t n, int classes, int h = 8) {
  LabeledDataset ds;
  ds.num_classes = classes;
  for (std::size_t i = 0; i < n; ++i) {
    ImageBuffer img(h, h, 3, static_cast<std::uint8_t>(40 + (i * 37) % 150));
    img.at(0, 0, 0) = static_cast<std::uint8_t>(i % 256);
    img.at(0, 0, 1) = static_cast<std::uint8_t>(i / 256);
    img.at(h - 1, h - 1, 2) = static_cast<std::uint8_t>(i * 13 % 256);
    ds.samples.push_back({"s" + std::to_string(i), std::move(img), static_cast<int>(i % classes)});
  }
  return ds;
}

// Editor that marks the attempt index in the image and in the metadata.
class MarkingEditor : public services::EditBackend {
 public:
  services::EditResponse edit(const services::EditRequest& req) override {
    const int attempt = std::stoi(services::find_arg(req.args, "attempt").value_or("0"));
    {
      std::lock_guard lock(mu_);
      ++calls_[encoded_index(req.image)];
      ++total_;
    }
    services::EditResponse r;
    ImageBuffer out = req.image;
    out.at(1, 1, 0) = static_cast<std::uint8_t>(200 + attempt);
    out.at(1, 1, 1) = static_cast<std::uint8_t>(req.seed % 256);
    r.image = std::move(out);
    services::CompositeMetadata m;
    m.trigger = req.trigger;
    m.variant = attempt;
    m.coverage = 0.05;
    r.metadata = m;
    r.recorded_args = req.args;
    return r;
  }
  std::string id() const override { return "marking"; }

  int calls(int sample) const {
    std::lock_guard lock(mu_);
    auto it = calls_.find(sample);
    return it == calls_.end() ? 0 : it->second;
  }
  int total() const {
    std::lock_guard lock(mu_);
    return total_;
  }
  int max_calls() const {
    std::lock_guard lock(mu_);
    int m = 0;
    for (const auto& [k, v] : calls_) m = std::max(m, v);
    return m;
  }

 private:
  mutable std::mutex mu_;
  std::map<int, int> calls_;
  int total_ = 0;
};

// QA stub driven by a rule over (sample index, attempt index).
class RuleStubVqa : public services::VqaClient {
 public:
  using Rule = std::function<bool(int sample, int attempt)>;
  explicit RuleStubVqa(Rule rule) : rule_(std::move(rule)) {}

  services::VqaResponse ask(const services::VqaRequest& req) override {
    services::VqaResponse r;
    const int attempt = req.metadata ? req.metadata->variant : 0;
    const bool yes = rule_(encoded_index(req.image), attempt);
    r.raw = yes ? "yes" : "no";
    r.answer = yes ? services::Answer::kYes : services::Answer::kNo;
    return r;
  }

 private:
  Rule rule_;
};

// Replies with a fixed raw string per question substring; default "no".
class ScriptedVqa : public services::VqaClient {
 public:
  explicit ScriptedVqa(std::map<std::string, std::string> replies) : replies_(std::move(replies)) {}
  services::VqaResponse ask(const services::VqaRequest& req) override {
    services::VqaResponse r;
    r.raw = "no";
    for (const auto& [k, v] : replies_)
      if (req.question.find(k) != std::string::npos) r.raw = v;
    r.answer = services::normalize_answer(r.raw);
    return r;
  }

 private:
  std::map<std::string, std::string> replies_;
};

class FailingChat : public services::ChatClient {
 public:
  services::ChatResponse complete(const services::ChatRequest&) override {
    services::ChatResponse r;
    r.error = "connection refused";
    r.attempts = 3;
    return r;
  }
};

}  // namespace vssc::testing
