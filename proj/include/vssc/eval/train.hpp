#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vssc/core/dataset.hpp"
#include "vssc/eval/network.hpp"

namespace vssc::eval {

struct LrSchedule {
  enum class Kind { kConstant, kStep, kCosine };
  Kind kind = Kind::kCosine;
  double base_lr = 0.05;
  int step_epochs = 10;  // kStep
  double gamma = 0.1;    // kStep
  int warmup_epochs = 1;

  // Learning rate at a fractional epoch position.
  double at(double epoch, int total_epochs) const;
};

std::string schedule_name(LrSchedule::Kind kind);
LrSchedule::Kind parse_schedule(const std::string& name);

struct TrainConfig {
  int epochs = 15;
  int batch_size = 64;
  LrSchedule lr;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  bool augment_flip = false;  // horizontal flip; off by default since it moves corner triggers
  bool augment_crop = false;  // pad-2 random crop
  std::uint64_t seed = 0;
  NetworkShape shape;  // height/width/channels/num_classes are taken from the data

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  ConvNet model;
  std::vector<EpochStats> history;
  double final_train_acc = 0.0;
  std::optional<double> val_acc;
  std::uint64_t seed = 0;
};

// Throws TrainingError when the loss becomes non-finite.
TrainResult train_classifier(const LabeledDataset& dataset, const TrainConfig& config,
                             const LabeledDataset* validation = nullptr);

double accuracy(const Classifier& model, const LabeledDataset& dataset);

}  // namespace vssc::eval
