#include "vssc/eval/train.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "vssc/core/errors.hpp"
#include "vssc/core/random.hpp"

namespace vssc::eval {

double LrSchedule::at(double epoch, int total_epochs) const {
  double lr = base_lr;
  switch (kind) {
    case Kind::kConstant: break;
    case Kind::kStep: lr = base_lr * std::pow(gamma, std::floor(epoch / std::max(1, step_epochs))); break;
    case Kind::kCosine:
      lr = 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * std::min(1.0, epoch / std::max(1, total_epochs))));
      break;
  }
  if (warmup_epochs > 0 && epoch < warmup_epochs) lr *= (epoch + 1e-3) / warmup_epochs;
  return lr;
}

std::string schedule_name(LrSchedule::Kind kind) {
  switch (kind) {
    case LrSchedule::Kind::kConstant: return "constant";
    case LrSchedule::Kind::kStep: return "step";
    case LrSchedule::Kind::kCosine: return "cosine";
  }
  return "cosine";
}

LrSchedule::Kind parse_schedule(const std::string& name) {
  if (name == "constant") return LrSchedule::Kind::kConstant;
  if (name == "step") return LrSchedule::Kind::kStep;
  if (name == "cosine") return LrSchedule::Kind::kCosine;
  throw ConfigError("unknown learning-rate schedule '" + name + "'");
}

void TrainConfig::validate() const {
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(lr.base_lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (lr.kind == LrSchedule::Kind::kStep && (lr.step_epochs <= 0 || !(lr.gamma > 0.0)))
    throw ConfigError("step schedule needs positive step_epochs and gamma");
}

namespace {

ImageBuffer augment(const ImageBuffer& img, const TrainConfig& config, Rng& rng) {
  ImageBuffer out = img;
  const int h = img.height(), w = img.width(), ch = img.channels();
  if (config.augment_crop) {
    const int dy = static_cast<int>(rng.below(5)) - 2;
    const int dx = static_cast<int>(rng.below(5)) - 2;
    std::vector<std::uint8_t> data(img.size(), 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int sy = y + dy, sx = x + dx;
        if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
        for (int c = 0; c < ch; ++c)
          data[(static_cast<std::size_t>(y) * w + x) * ch + c] = img.at(sy, sx, c);
      }
    out = ImageBuffer(h, w, ch, std::move(data));
  }
  if (config.augment_flip && rng.below(2) == 1) {
    std::vector<std::uint8_t> data(out.size());
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < ch; ++c) data[(static_cast<std::size_t>(y) * w + x) * ch + c] = out.at(y, w - 1 - x, c);
    out = ImageBuffer(h, w, ch, std::move(data));
  }
  return out;
}

}  // namespace

TrainResult train_classifier(const LabeledDataset& dataset, const TrainConfig& config,
                             const LabeledDataset* validation) {
  config.validate();
  dataset.validate();
  if (dataset.num_classes < 2) throw ConfigError("training needs at least 2 classes");
  if (dataset.size() == 0) throw ConfigError("training dataset is empty");

  NetworkShape shape = config.shape;
  const auto& first = dataset.samples.front().image;
  shape.height = first.height();
  shape.width = first.width();
  shape.channels = first.channels();
  shape.num_classes = dataset.num_classes;

  TrainResult result;
  result.seed = config.seed;
  result.model = ConvNet(shape, config.seed);
  auto& params = result.model.parameters();
  std::vector<Mat> velocity;
  for (const auto& p : params) velocity.push_back(Mat::Zero(p.rows(), p.cols()));
  std::vector<Mat> grads;

  Rng order_rng(derive_seed(config.seed, "train_order"));
  Rng aug_rng(derive_seed(config.seed, "train_augment"));
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (order.size() + batch - 1) / batch;
  const bool augmenting = config.augment_flip || config.augment_crop;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t correct = 0;
    double lr = 0.0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      const std::size_t begin = step * batch;
      const std::size_t end = std::min(order.size(), begin + batch);
      std::vector<ImageBuffer> augmented;
      std::vector<const ImageBuffer*> images;
      std::vector<int> labels;
      if (augmenting) augmented.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const auto& s = dataset.samples[order[i]];
        if (augmenting) {
          augmented.push_back(augment(s.image, config, aug_rng));
          images.push_back(&augmented.back());
        } else {
          images.push_back(&s.image);
        }
        labels.push_back(s.label);
      }
      const Mat input = result.model.to_input(images);
      const double loss = result.model.loss_and_gradients(input, labels, grads);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << " step " << step << " (lr " << lr
            << ", seed " << config.seed << ")";
        throw TrainingError(msg.str());
      }
      loss_sum += loss * static_cast<double>(end - begin);

      lr = config.lr.at(epoch + static_cast<double>(step) / steps_per_epoch, config.epochs);
      const auto lrf = static_cast<float>(lr);
      const auto mom = static_cast<float>(config.momentum);
      const auto wd = static_cast<float>(config.weight_decay);
      for (std::size_t k = 0; k < params.size(); ++k) {
        Mat g = grads[k];
        if (k % 2 == 0) g += wd * params[k];  // weights only
        velocity[k] = mom * velocity[k] + g;
        params[k] -= lrf * velocity[k];
      }
    }
    // Train accuracy is measured after the epoch on unaugmented data.
    std::vector<const ImageBuffer*> all;
    for (const auto& s : dataset.samples) all.push_back(&s.image);
    const auto pred = result.model.predict(all);
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == dataset.samples[i].label ? 1 : 0;
    result.history.push_back({epoch, loss_sum / static_cast<double>(order.size()),
                              static_cast<double>(correct) / static_cast<double>(order.size()), lr});
  }
  result.final_train_acc = result.history.back().train_acc;
  if (validation != nullptr && validation->size() > 0) result.val_acc = accuracy(result.model, *validation);
  return result;
}

double accuracy(const Classifier& model, const LabeledDataset& dataset) {
  if (dataset.size() == 0) return 0.0;
  std::vector<const ImageBuffer*> images;
  for (const auto& s : dataset.samples) images.push_back(&s.image);
  const auto pred = model.predict(images);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == dataset.samples[i].label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

}  // namespace vssc::eval
