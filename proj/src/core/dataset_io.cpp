#include "vssc/core/dataset_io.hpp"

#include <cctype>
#include <fstream>

#include <json.hpp>

#include "vssc/core/errors.hpp"
#include "vssc/core/png_io.hpp"

namespace vssc {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw ConfigError("unknown split '" + s + "'");
}

// Ids may contain characters that are awkward in file names.
std::string file_stem(const std::string& id, std::size_t index) {
  std::string stem;
  for (char ch : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_';
    stem.push_back(ok ? ch : '_');
  }
  if (stem.empty() || stem != id) stem += "_" + std::to_string(index);
  return stem;
}

ordered_json read_index(const fs::path& dir) {
  std::ifstream in(dir / "index.json");
  if (!in) throw ConfigError("missing dataset index " + (dir / "index.json").string());
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed dataset index: " + std::string(e.what()));
  }
}

void write_index(const fs::path& dir, const ordered_json& index) {
  std::ofstream out(dir / "index.json", std::ios::trunc);
  out << index.dump(1) << '\n';
}

}  // namespace

void save_dataset(const LabeledDataset& dataset, const fs::path& dir) {
  fs::create_directories(dir / "images");
  ordered_json index;
  index["num_classes"] = dataset.num_classes;
  index["split"] = split_name(dataset.split);
  ordered_json samples = ordered_json::object();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset.samples[i];
    const std::string rel = "images/" + file_stem(s.id, i) + ".png";
    write_png(dir / rel, s.image);
    samples[s.id] = {{"path", rel}, {"label", s.label}};
  }
  index["samples"] = std::move(samples);
  write_index(dir, index);
}

LabeledDataset load_dataset(const fs::path& dir) {
  const ordered_json index = read_index(dir);
  LabeledDataset ds;
  try {
    ds.num_classes = index.at("num_classes").get<int>();
    ds.split = parse_split(index.value("split", "train"));
    for (const auto& [id, entry] : index.at("samples").items()) {
      Sample s;
      s.id = id;
      s.label = entry.at("label").get<int>();
      s.image = read_png(dir / entry.at("path").get<std::string>());
      ds.samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed dataset index in " + dir.string() + ": " + e.what());
  }
  ds.validate();
  return ds;
}

void save_detection_dataset(const DetectionDataset& dataset, const fs::path& dir) {
  fs::create_directories(dir / "images");
  ordered_json index;
  index["num_classes"] = dataset.num_classes;
  index["split"] = split_name(dataset.split);
  ordered_json samples = ordered_json::object();
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    const std::string rel = "images/" + file_stem(s.id, i) + ".png";
    write_png(dir / rel, s.image);
    ordered_json boxes = ordered_json::array();
    for (const auto& b : s.boxes) {
      // Zero-area boxes are vanished annotations and are not exported.
      if (b.w <= 0.0 || b.h <= 0.0) continue;
      boxes.push_back({{"a", b.a}, {"b", b.b}, {"w", b.w}, {"h", b.h}, {"c", b.c}});
    }
    samples[s.id] = {{"path", rel}, {"boxes", std::move(boxes)}};
  }
  index["samples"] = std::move(samples);
  write_index(dir, index);
}

DetectionDataset load_detection_dataset(const fs::path& dir) {
  const ordered_json index = read_index(dir);
  DetectionDataset ds;
  try {
    ds.num_classes = index.at("num_classes").get<int>();
    ds.split = parse_split(index.value("split", "train"));
    for (const auto& [id, entry] : index.at("samples").items()) {
      DetectionSample s;
      s.id = id;
      s.image = read_png(dir / entry.at("path").get<std::string>());
      for (const auto& b : entry.at("boxes")) {
        BoundingBox box{b.at("a").get<double>(), b.at("b").get<double>(), b.at("w").get<double>(),
                        b.at("h").get<double>(), b.at("c").get<int>(), std::nullopt};
        if (b.contains("confidence")) box.confidence = b.at("confidence").get<double>();
        s.boxes.push_back(clamp_to_image(box, s.image.height(), s.image.width()));
      }
      ds.samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed detection index in " + dir.string() + ": " + e.what());
  }
  return ds;
}

}  // namespace vssc
