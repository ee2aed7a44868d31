#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vssc/core/dataset.hpp"
#include "vssc/distortions/distortions.hpp"
#include "vssc/eval/synth.hpp"
#include "vssc/eval/train.hpp"
#include "vssc/pipeline/generation.hpp"
#include "vssc/pipeline/selection.hpp"

namespace vssc::cli {

// Backend declaration: "type" picks the implementation, the rest of the
// object is handed to it.
struct BackendDecl {
  std::string type;
  nlohmann::json params = nlohmann::json::object();
};

struct Backends {
  BackendDecl chat{"fixture", {{"reply", ""}}};
  BackendDecl edit{"local", nlohmann::json::object()};
  BackendDecl qa{"rule", nlohmann::json::object()};
};

struct DatasetPaths {
  std::filesystem::path train;
  std::filesystem::path test;
  std::optional<eval::SynthConfig> synthetic;  // used when no paths are given
};

struct RunConfig {
  std::string task = "classification";
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  DatasetPaths dataset;
  std::vector<std::string> class_names;
  AttackConfig attack;
  std::optional<TriggerSpec> trigger;
  pipeline::SelectionConfig selection;
  pipeline::QualityCriteria criteria;
  pipeline::GenerationOptions generation;
  Backends backends;
  std::vector<distort::DistortionConfig> sweep;
  eval::TrainConfig train;
  std::uint64_t inference_seed = 0;  // Stage III test-set poisoning
  std::filesystem::path base_dir;    // config file directory, for backend paths
};

// Command-line overrides, applied to the JSON before validation.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> pratio;
  std::optional<std::string> trigger;
  std::optional<std::string> backend;
  std::optional<std::filesystem::path> output_dir;
};

void apply_overrides(nlohmann::json& config, const Overrides& overrides);

// Strict parse: unknown keys, wrong types and missing paths raise ConfigError.
// Relative paths resolve against `base_dir`. Seeds not given explicitly are
// derived from the root seed.
RunConfig parse_config(const nlohmann::json& config, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

// Fully resolved configuration (defaults filled in); the hash is SHA-256 of
// its compact dump with sorted keys.
nlohmann::json to_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

TriggerSpec parse_trigger(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json trigger_to_json(const TriggerSpec& trigger);
// "badnets", "sig", ... or "semantic:<text>"; anything else is a semantic phrase.
nlohmann::json trigger_json_from_arg(const std::string& arg);

distort::DistortionConfig parse_distortion(const nlohmann::json& j);
nlohmann::json distortion_to_json(const distort::DistortionConfig& d);

}  // namespace vssc::cli
