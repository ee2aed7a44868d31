#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "vssc/core/dataset.hpp"

namespace vssc {

nlohmann::json to_json(const PoisonRecord& record);
PoisonRecord record_from_json(const nlohmann::json& j);

// JSON-Lines: one PoisonRecord per line, then a trailing summary line.
std::string manifest_to_jsonl(const PoisonManifest& manifest);
PoisonManifest manifest_from_jsonl(const std::string& text);

void write_manifest(const PoisonManifest& manifest, const std::filesystem::path& path);
PoisonManifest read_manifest(const std::filesystem::path& path);

}  // namespace vssc
