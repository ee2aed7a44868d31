#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace vssc::eval {

enum class Task { kClassification, kDetectionOda, kDetectionGma, kVerification };

std::string task_name(Task task);
Task parse_task(const std::string& name);

enum class ScenarioKind { kDigital, kD2pSim, kDistortion };

struct Scenario {
  ScenarioKind kind = ScenarioKind::kDigital;
  std::string distortion;  // kind name for kDistortion
  double param = 0.0;

  static Scenario digital() { return {}; }
  std::string label() const;  // "digital", "d2p_sim", "blur"
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct EvalReport {
  Task task = Task::kClassification;
  Scenario scenario;
  std::string attack;
  double c_acc = 0.0;
  std::optional<double> asr;  // unset when nothing poisoned could be scored
  std::optional<double> r_acc;
  std::size_t clean_count = 0;
  std::size_t poisoned_count = 0;
  std::size_t excluded_count = 0;   // target-class originals plus poisoning failures
  std::size_t poison_failures = 0;  // part of excluded_count

  bool asr_undefined() const { return !asr.has_value(); }
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::ordered_json& j);

std::string reports_to_json(const std::vector<EvalReport>& reports);
std::vector<EvalReport> reports_from_json(const std::string& text);

void write_reports(const std::filesystem::path& path, const std::vector<EvalReport>& reports);
std::vector<EvalReport> read_reports(const std::filesystem::path& path);

// scenario,param,c_acc,asr,r_acc (empty cells for undefined values).
std::string sweep_csv(const std::vector<EvalReport>& reports);

// Comparison table over several runs, rows sorted by attack name (stable
// within an attack).
std::string comparison_table(std::vector<EvalReport> reports);

}  // namespace vssc::eval
