#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace vssc::services {

// Append-only trail of remote calls. Entries carry the request hash, latency
// and outcome; bodies are stored with inline images replaced by their digest.
// Credentials are never passed in, so they cannot leak into the trail.
class AuditLog {
 public:
  AuditLog() = default;
  explicit AuditLog(std::filesystem::path file);

  void record(nlohmann::json entry);
  std::vector<nlohmann::json> entries() const;

 private:
  mutable std::mutex mu_;
  std::optional<std::filesystem::path> file_;
  std::vector<nlohmann::json> entries_;
};

// Replace every string field named "image" by {"sha256", "bytes"} so the trail
// stays small and free of pixel payloads.
nlohmann::json redact_images(const nlohmann::json& body);

}  // namespace vssc::services
