#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vssc/core/image.hpp"

namespace vssc::eval {

using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Predictor interface used by every metric. Logits are (classes x batch).
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual Mat logits(std::span<const ImageBuffer* const> images) const = 0;
  virtual int num_classes() const = 0;

  std::vector<int> predict(std::span<const ImageBuffer* const> images) const;
  int predict(const ImageBuffer& image) const;
};

struct NetworkShape {
  int height = 32;
  int width = 32;
  int channels = 3;
  int num_classes = 10;
  std::vector<int> conv_channels{16, 32, 64};  // 3x3 conv + ReLU + 2x2 max-pool each
  int hidden = 128;

  void validate() const;
  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

// Small VGG-style network: conv blocks, one hidden dense layer, linear head.
class ConvNet : public Classifier {
 public:
  ConvNet() = default;
  ConvNet(const NetworkShape& shape, std::uint64_t seed);

  Mat logits(std::span<const ImageBuffer* const> images) const override;
  int num_classes() const override { return shape_.num_classes; }
  const NetworkShape& shape() const { return shape_; }

  // Hidden-layer activations (hidden x batch), the embedding used for
  // verification.
  Mat features(std::span<const ImageBuffer* const> images) const;

  // Mean softmax cross-entropy over the batch and its gradient for every
  // parameter, in parameters() order.
  double loss_and_gradients(const Mat& input, std::span<const int> labels, std::vector<Mat>& grads) const;
  Mat forward(const Mat& input) const;

  // Weights and biases alternate: W0, b0, W1, b1, ... Biases are column vectors.
  std::vector<Mat>& parameters() { return params_; }
  const std::vector<Mat>& parameters() const { return params_; }

  // (channels x batch*H*W) input with per-channel planes; pixel v maps to
  // (v/255 - 0.5) / 0.25.
  Mat to_input(std::span<const ImageBuffer* const> images) const;

  void save(const std::filesystem::path& path) const;
  static ConvNet load(const std::filesystem::path& path);

 private:
  struct Cache;
  Mat run(const Mat& input, Cache* cache, bool stop_at_hidden) const;

  NetworkShape shape_;
  std::vector<Mat> params_;
};

}  // namespace vssc::eval
