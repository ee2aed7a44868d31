#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vssc/core/errors.hpp"

namespace vssc::cli {

extern const char* const kVersion;

class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

class LockError : public Error {
 public:
  using Error::Error;
};

// Exclusive ownership of an output directory for the lifetime of the object.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

struct LedgerEntry {
  std::string command;
  std::string status;  // ok, warning, failed
  std::string config_hash;
  std::string started;
  std::string finished;
  std::map<std::string, std::string> artifacts;  // name -> path relative to the run directory
  nlohmann::json details = nlohmann::json::object();
};

// Append-only JSONL record of every command run against an output directory.
class Ledger {
 public:
  explicit Ledger(std::filesystem::path dir);

  void append(const LedgerEntry& entry) const;
  std::vector<nlohmann::json> entries() const;

  // Latest non-failed entry listing `name`, if the file still exists.
  std::optional<std::filesystem::path> artifact(const std::string& name) const;
  // As artifact(), but throws MissingArtifactError naming `producer`.
  std::filesystem::path require(const std::string& name, const std::string& producer) const;

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path file() const { return dir_ / "ledger.jsonl"; }

 private:
  std::filesystem::path dir_;
};

std::string utc_timestamp();

}  // namespace vssc::cli
