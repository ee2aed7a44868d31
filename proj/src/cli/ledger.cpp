#include "vssc/cli/ledger.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>

namespace vssc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const char* const kVersion = "0.1.0";

RunLock::RunLock(const fs::path& dir) : path_(dir / ".vssc.lock") {
  fs::create_directories(dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    throw LockError("output directory " + dir.string() + " is in use (remove " + path_.string() +
                    " if no run is active)");
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Ledger::Ledger(fs::path dir) : dir_(std::move(dir)) {}

void Ledger::append(const LedgerEntry& e) const {
  fs::create_directories(dir_);
  json j{{"command", e.command},   {"status", e.status},       {"config_hash", e.config_hash},
         {"started", e.started},   {"finished", e.finished},   {"version", kVersion},
         {"artifacts", e.artifacts}, {"details", e.details}};
  std::ofstream os(file(), std::ios::app);
  if (!os) throw Error("cannot append to ledger " + file().string());
  os << j.dump() << '\n';
}

std::vector<json> Ledger::entries() const {
  std::vector<json> out;
  std::ifstream in(file());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& ex) {
      throw DecodeError("corrupt ledger line in " + file().string() + ": " + ex.what());
    }
  }
  return out;
}

std::optional<fs::path> Ledger::artifact(const std::string& name) const {
  const auto all = entries();
  for (auto it = all.rbegin(); it != all.rend(); ++it) {
    if (it->value("status", "") == "failed") continue;
    const auto& arts = (*it)["artifacts"];
    if (arts.is_object() && arts.contains(name)) {
      const fs::path p = dir_ / arts[name].get<std::string>();
      if (fs::exists(p)) return p;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

fs::path Ledger::require(const std::string& name, const std::string& producer) const {
  if (auto p = artifact(name)) return *p;
  throw MissingArtifactError("missing upstream artifact '" + name + "' in " + dir_.string() + "; run `vssc " +
                             producer + "` first");
}

}  // namespace vssc::cli
