#pragma once

#include <filesystem>

#include "vssc/core/dataset.hpp"

namespace vssc {

// On-disk layout: <dir>/index.json plus one PNG per sample. The index keeps
// sample order: {"num_classes", "split", "samples": {id: {"path", "label"|"boxes"}}}.
void save_dataset(const LabeledDataset& dataset, const std::filesystem::path& dir);
LabeledDataset load_dataset(const std::filesystem::path& dir);

void save_detection_dataset(const DetectionDataset& dataset, const std::filesystem::path& dir);
DetectionDataset load_detection_dataset(const std::filesystem::path& dir);

}  // namespace vssc
