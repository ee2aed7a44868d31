#include "vssc/eval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vssc/core/errors.hpp"
#include "vssc/core/png_io.hpp"

namespace vssc::eval {

using nlohmann::ordered_json;

std::string task_name(Task task) {
  switch (task) {
    case Task::kClassification: return "classification";
    case Task::kDetectionOda: return "detection_oda";
    case Task::kDetectionGma: return "detection_gma";
    case Task::kVerification: return "verification";
  }
  return "classification";
}

Task parse_task(const std::string& name) {
  if (name == "classification") return Task::kClassification;
  if (name == "detection_oda") return Task::kDetectionOda;
  if (name == "detection_gma") return Task::kDetectionGma;
  if (name == "verification") return Task::kVerification;
  throw ConfigError("unknown task '" + name + "'");
}

std::string Scenario::label() const {
  switch (kind) {
    case ScenarioKind::kDigital: return "digital";
    case ScenarioKind::kD2pSim: return "d2p_sim";
    case ScenarioKind::kDistortion: return distortion;
  }
  return "digital";
}

namespace {

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<double> opt_from(const ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

std::string fmt_param(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

ordered_json to_json(const EvalReport& r) {
  ordered_json j;
  j["task"] = task_name(r.task);
  j["scenario"] = r.scenario.label();
  j["param"] = r.scenario.param;
  j["attack"] = r.attack;
  j["c_acc"] = r.c_acc;
  j["asr"] = opt(r.asr);
  j["r_acc"] = opt(r.r_acc);
  j["asr_undefined"] = r.asr_undefined();
  j["clean_count"] = r.clean_count;
  j["poisoned_count"] = r.poisoned_count;
  j["excluded_count"] = r.excluded_count;
  j["poison_failures"] = r.poison_failures;
  return j;
}

EvalReport report_from_json(const ordered_json& j) {
  try {
    EvalReport r;
    r.task = parse_task(j.at("task").get<std::string>());
    const auto scenario = j.at("scenario").get<std::string>();
    if (scenario == "digital") {
      r.scenario.kind = ScenarioKind::kDigital;
    } else if (scenario == "d2p_sim") {
      r.scenario.kind = ScenarioKind::kD2pSim;
    } else {
      r.scenario.kind = ScenarioKind::kDistortion;
      r.scenario.distortion = scenario;
    }
    r.scenario.param = j.at("param").get<double>();
    r.attack = j.value("attack", "");
    r.c_acc = j.at("c_acc").get<double>();
    r.asr = opt_from(j, "asr");
    r.r_acc = opt_from(j, "r_acc");
    r.clean_count = j.value("clean_count", std::size_t{0});
    r.poisoned_count = j.value("poisoned_count", std::size_t{0});
    r.excluded_count = j.value("excluded_count", std::size_t{0});
    r.poison_failures = j.value("poison_failures", std::size_t{0});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("malformed report: ") + e.what());
  }
}

std::string reports_to_json(const std::vector<EvalReport>& reports) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr.dump(2) + "\n";
}

std::vector<EvalReport> reports_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("report file is not JSON: ") + e.what());
  }
  if (j.is_object()) return {report_from_json(j)};
  if (!j.is_array()) throw DecodeError("report file must hold an object or an array");
  std::vector<EvalReport> out;
  for (const auto& item : j) out.push_back(report_from_json(item));
  return out;
}

void write_reports(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
  const auto text = reports_to_json(reports);
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<EvalReport> read_reports(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return reports_from_json(std::string(bytes.begin(), bytes.end()));
}

std::string sweep_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  os << "scenario,param,c_acc,asr,r_acc\n";
  for (const auto& r : reports)
    os << r.scenario.label() << ',' << fmt_param(r.scenario.param) << ',' << fmt(r.c_acc) << ',' << fmt(r.asr)
       << ',' << fmt(r.r_acc) << '\n';
  return os.str();
}

std::string comparison_table(std::vector<EvalReport> reports) {
  std::stable_sort(reports.begin(), reports.end(),
                   [](const EvalReport& a, const EvalReport& b) { return a.attack < b.attack; });
  std::ostringstream os;
  os << "attack,task,scenario,param,c_acc,asr,r_acc,excluded\n";
  for (const auto& r : reports)
    os << r.attack << ',' << task_name(r.task) << ',' << r.scenario.label() << ',' << fmt_param(r.scenario.param)
       << ',' << fmt(r.c_acc) << ',' << fmt(r.asr) << ',' << fmt(r.r_acc) << ',' << r.excluded_count << '\n';
  return os.str();
}

}  // namespace vssc::eval
