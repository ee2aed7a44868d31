#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vssc/core/dataset.hpp"

namespace vssc::eval {

// Procedural desk dataset: one centred shape per image over a noisy gradient.
struct SynthConfig {
  int num_classes = 10;  // at most 10 shapes
  int train_per_class = 500;
  int test_per_class = 100;
  int size = 32;
  double noise_sigma = 6.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthDatasets {
  LabeledDataset train;
  LabeledDataset test;
  std::vector<std::string> class_names;
};

std::vector<std::string> shape_class_names(int num_classes);

ImageBuffer render_shape(int cls, int size, double noise_sigma, std::uint64_t seed);

SynthDatasets make_shapes_dataset(const SynthConfig& config);

}  // namespace vssc::eval
