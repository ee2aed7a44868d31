#include <cctype>
#include <cmath>

#include "vssc/core/hash.hpp"
#include "vssc/services/local.hpp"

namespace vssc::services {

ChatResponse FixtureChatClient::complete(const ChatRequest&) {
  ChatResponse r;
  r.status = FinishStatus::kOk;
  r.text = reply_;
  r.attempts = 1;
  return r;
}

EditResponse EchoEditBackend::edit(const EditRequest& request) {
  EditResponse r;
  r.image = request.image;
  r.recorded_args = request.args;
  r.recorded_args.emplace_back("seed", std::to_string(request.seed));
  r.attempts = 1;
  return r;
}

VqaResponse ConstantVqa::ask(const VqaRequest&) {
  VqaResponse r;
  r.answer = yes_ ? Answer::kYes : Answer::kNo;
  r.raw = yes_ ? "yes" : "no";
  return r;
}

IsrFixtureVqa::IsrFixtureVqa(std::map<std::string, double> isr) {
  for (auto& [k, v] : isr) {
    std::string key = k;
    for (auto& ch : key) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    isr_[key] = v;
  }
}

VqaResponse IsrFixtureVqa::ask(const VqaRequest& request) {
  std::string q = request.question;
  for (auto& ch : q) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  // Longest fixture key named in the question ("red pepper" over "pepper").
  const std::string* trigger = nullptr;
  for (const auto& [k, v] : isr_) {
    if (q.find(k) != std::string::npos && (!trigger || k.size() > trigger->size())) trigger = &k;
  }
  VqaResponse r;
  if (!trigger) {
    r.raw = "no";
    return r;
  }
  const std::string digest = sha256_hex(request.image.data());
  std::lock_guard lock(mu_);
  auto& seen = decisions_[*trigger];
  auto it = seen.find(digest);
  if (it == seen.end()) {
    const double isr = isr_.at(*trigger);
    const auto k = static_cast<double>(seen.size());
    const bool pass = std::floor((k + 1.0) * isr + 0.5) > std::floor(k * isr + 0.5);
    it = seen.emplace(digest, pass).first;
  }
  r.answer = it->second ? Answer::kYes : Answer::kNo;
  r.raw = it->second ? "yes" : "no";
  return r;
}

}  // namespace vssc::services
