#include "vssc/services/audit.hpp"

#include <fstream>

#include "vssc/core/hash.hpp"

namespace vssc::services {

AuditLog::AuditLog(std::filesystem::path file) : file_(std::move(file)) {
  if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
}

void AuditLog::record(nlohmann::json entry) {
  std::lock_guard lock(mu_);
  if (file_) {
    std::ofstream out(*file_, std::ios::app);
    out << entry.dump() << '\n';
  }
  entries_.push_back(std::move(entry));
}

std::vector<nlohmann::json> AuditLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

nlohmann::json redact_images(const nlohmann::json& body) {
  if (body.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : body.items()) {
      if (k == "image" && v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        out[k] = {{"sha256", sha256_hex(s)}, {"bytes", s.size()}};
      } else {
        out[k] = redact_images(v);
      }
    }
    return out;
  }
  if (body.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : body) out.push_back(redact_images(v));
    return out;
  }
  return body;
}

}  // namespace vssc::services
