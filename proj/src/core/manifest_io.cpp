#include "vssc/core/manifest_io.hpp"

#include <fstream>
#include <sstream>

#include "vssc/core/errors.hpp"

namespace vssc {

using nlohmann::json;

namespace {

json verdict_to_json(const QaVerdict& v) {
  json answers = json::array();
  for (const auto& a : v.answers) {
    answers.push_back({{"criterion", a.criterion}, {"yes", a.yes}, {"raw", a.raw}});
  }
  json j = {{"pass", v.pass}, {"answers", std::move(answers)}};
  if (!v.error.empty()) j["error"] = v.error;
  return j;
}

QaVerdict verdict_from_json(const json& j) {
  QaVerdict v;
  v.pass = j.at("pass").get<bool>();
  for (const auto& a : j.at("answers")) {
    v.answers.push_back({a.at("criterion").get<std::string>(), a.at("yes").get<bool>(),
                         a.value("raw", std::string{})});
  }
  v.error = j.value("error", std::string{});
  return v;
}

}  // namespace

json to_json(const PoisonRecord& r) {
  json attempts = json::array();
  for (const auto& a : r.attempts) {
    json args = json::array();
    for (const auto& [k, v] : a.backend_args) args.push_back({k, v});
    json ja = {{"attempt", a.attempt_index}, {"seed", a.seed}, {"args", std::move(args)}};
    if (!a.backend_error.empty()) ja["backend_error"] = a.backend_error;
    if (a.verdict) ja["qa"] = verdict_to_json(*a.verdict);
    attempts.push_back(std::move(ja));
  }
  return {{"type", "record"},
          {"sample_id", r.sample_id},
          {"sample_index", r.sample_index},
          {"trigger", r.trigger},
          {"attempts_used", r.attempts_used},
          {"attempts", std::move(attempts)},
          {"status", r.final_status == PoisonStatus::kPoisoned ? "poisoned" : "discarded"},
          {"seed", r.seed}};
}

PoisonRecord record_from_json(const json& j) {
  PoisonRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.sample_index = j.at("sample_index").get<std::size_t>();
  r.trigger = j.value("trigger", std::string{});
  r.attempts_used = j.at("attempts_used").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  const auto status = j.at("status").get<std::string>();
  if (status == "poisoned") {
    r.final_status = PoisonStatus::kPoisoned;
  } else if (status == "discarded") {
    r.final_status = PoisonStatus::kDiscarded;
  } else {
    throw DecodeError("unknown record status '" + status + "'");
  }
  for (const auto& ja : j.at("attempts")) {
    AttemptRecord a;
    a.attempt_index = ja.at("attempt").get<int>();
    a.seed = ja.at("seed").get<std::uint64_t>();
    for (const auto& kv : ja.at("args")) {
      a.backend_args.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
    }
    a.backend_error = ja.value("backend_error", std::string{});
    if (ja.contains("qa")) a.verdict = verdict_from_json(ja.at("qa"));
    r.attempts.push_back(std::move(a));
  }
  return r;
}

std::string manifest_to_jsonl(const PoisonManifest& m) {
  std::ostringstream out;
  for (const auto& r : m.records) out << to_json(r).dump() << '\n';
  json summary = {{"type", "summary"},
                  {"dataset_size", m.dataset_size},
                  {"target_label", m.target_label},
                  {"target_ratio", m.target_ratio},
                  {"actual_ratio", m.actual_ratio},
                  {"poisoned", m.poisoned_count()},
                  {"dataset_fingerprint", m.dataset_fingerprint},
                  {"undersized", m.undersized},
                  {"zero_poisoned", m.zero_poisoned}};
  out << summary.dump() << '\n';
  return out.str();
}

PoisonManifest manifest_from_jsonl(const std::string& text) {
  PoisonManifest m;
  std::istringstream in(text);
  std::string line;
  bool have_summary = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (have_summary) throw DecodeError("manifest has lines after the summary record");
      const json j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "record") {
        m.records.push_back(record_from_json(j));
      } else if (type == "summary") {
        m.dataset_size = j.at("dataset_size").get<std::size_t>();
        m.target_label = j.at("target_label").get<int>();
        m.target_ratio = j.at("target_ratio").get<double>();
        m.actual_ratio = j.at("actual_ratio").get<double>();
        m.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
        m.undersized = j.value("undersized", false);
        m.zero_poisoned = j.value("zero_poisoned", false);
        have_summary = true;
      } else {
        throw DecodeError("unknown manifest line type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed manifest: ") + e.what());
  }
  if (!have_summary) throw DecodeError("manifest lacks a summary record");
  return m;
}

void write_manifest(const PoisonManifest& manifest, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << manifest_to_jsonl(manifest);
}

PoisonManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return manifest_from_jsonl(buf.str());
}

}  // namespace vssc
