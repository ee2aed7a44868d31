#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "vssc/cli/config.hpp"
#include "vssc/cli/ledger.hpp"
#include "vssc/services/audit.hpp"
#include "vssc/services/clients.hpp"

namespace vssc::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // also: no qualified trigger, replay mismatch
  kExitConfig = 2,
  kExitZeroPoisoned = 3,
  kExitBackend = 4,
  kExitMissingArtifact = 5,
};

struct Services {
  std::shared_ptr<services::AuditLog> audit;
  std::unique_ptr<services::ChatClient> chat;
  std::unique_ptr<services::EditBackend> edit;
  std::unique_ptr<services::VqaClient> qa;
};

// Backend types: chat {fixture, http}; edit {local, echo, http}; qa {rule,
// constant, isr_fixture, http}.
Services make_services(const Backends& backends, const std::filesystem::path& base_dir,
                       std::shared_ptr<services::AuditLog> audit);

int cmd_select_trigger(const RunConfig& config, std::ostream& out);
int cmd_poison(const RunConfig& config, bool replay, std::ostream& out);
int cmd_train(const RunConfig& config, bool clean, std::ostream& out);
int cmd_eval(const RunConfig& config, std::ostream& out);
int cmd_sweep(const RunConfig& config, bool plot, std::ostream& out);
// Each input is a report file or a run directory (report.json, sweep.json).
int cmd_report(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out_file,
               std::ostream& out);

// Full command line, exceptions mapped onto exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vssc::cli
