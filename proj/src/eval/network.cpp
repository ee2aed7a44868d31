#include "vssc/eval/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "vssc/core/errors.hpp"
#include "vssc/core/random.hpp"

namespace vssc::eval {

std::vector<int> Classifier::predict(std::span<const ImageBuffer* const> images) const {
  const Mat z = logits(images);
  std::vector<int> out(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    Eigen::Index best = 0;
    z.col(j).maxCoeff(&best);
    out[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  return out;
}

int Classifier::predict(const ImageBuffer& image) const {
  const ImageBuffer* p = &image;
  return predict(std::span<const ImageBuffer* const>(&p, 1)).front();
}

void NetworkShape::validate() const {
  if (height <= 0 || width <= 0) throw ConfigError("network input size must be positive");
  if (channels != 1 && channels != 3) throw ConfigError("network input must have 1 or 3 channels");
  if (num_classes < 2) throw ConfigError("network needs at least 2 classes");
  if (conv_channels.empty()) throw ConfigError("network needs at least one conv block");
  if (hidden <= 0) throw ConfigError("hidden width must be positive");
  const int div = 1 << conv_channels.size();
  if (height % div != 0 || width % div != 0)
    throw ConfigError("input size must be divisible by 2^(number of conv blocks)");
  for (int c : conv_channels)
    if (c <= 0) throw ConfigError("conv widths must be positive");
}

namespace {

Mat he_init(int rows, int cols, int fan_in, Rng& rng) {
  Mat m(rows, cols);
  const double stddev = std::sqrt(2.0 / fan_in);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal() * stddev);
  return m;
}

Mat im2col(const Mat& in, int c_in, int n, int h, int w) {
  const Eigen::Index cols = static_cast<Eigen::Index>(n) * h * w;
  Mat col(static_cast<Eigen::Index>(c_in) * 9, cols);
  for (int c = 0; c < c_in; ++c) {
    const float* src = in.data() + static_cast<std::size_t>(c) * cols;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        float* dst = col.data() + static_cast<std::size_t>(c * 9 + ky * 3 + kx) * cols;
        for (int b = 0; b < n; ++b) {
          for (int y = 0; y < h; ++y) {
            float* d = dst + (static_cast<std::size_t>(b) * h + y) * w;
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= h) {
              std::memset(d, 0, sizeof(float) * static_cast<std::size_t>(w));
              continue;
            }
            const float* s = src + (static_cast<std::size_t>(b) * h + sy) * w;
            for (int x = 0; x < w; ++x) {
              const int sx = x + kx - 1;
              d[x] = (sx >= 0 && sx < w) ? s[sx] : 0.0f;
            }
          }
        }
      }
    }
  }
  return col;
}

Mat col2im(const Mat& col, int c_in, int n, int h, int w) {
  const Eigen::Index cols = static_cast<Eigen::Index>(n) * h * w;
  Mat out = Mat::Zero(c_in, cols);
  for (int c = 0; c < c_in; ++c) {
    float* dst = out.data() + static_cast<std::size_t>(c) * cols;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const float* src = col.data() + static_cast<std::size_t>(c * 9 + ky * 3 + kx) * cols;
        for (int b = 0; b < n; ++b) {
          for (int y = 0; y < h; ++y) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= h) continue;
            const float* s = src + (static_cast<std::size_t>(b) * h + y) * w;
            float* d = dst + (static_cast<std::size_t>(b) * h + sy) * w;
            for (int x = 0; x < w; ++x) {
              const int sx = x + kx - 1;
              if (sx >= 0 && sx < w) d[sx] += s[x];
            }
          }
        }
      }
    }
  }
  return out;
}

// 2x2 max-pool; `arg` receives, per output, the source column index.
Mat maxpool(const Mat& in, int n, int h, int w, std::vector<int>* arg) {
  const int oh = h / 2, ow = w / 2;
  const Eigen::Index ocols = static_cast<Eigen::Index>(n) * oh * ow;
  Mat out(in.rows(), ocols);
  if (arg) arg->assign(static_cast<std::size_t>(in.rows() * ocols), 0);
  for (Eigen::Index c = 0; c < in.rows(); ++c) {
    const float* s = in.data() + c * in.cols();
    float* d = out.data() + c * ocols;
    for (int b = 0; b < n; ++b) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          int best = (b * h + 2 * y) * w + 2 * x;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const int idx = (b * h + 2 * y + dy) * w + 2 * x + dx;
              if (s[idx] > s[best]) best = idx;
            }
          const std::size_t o = (static_cast<std::size_t>(b) * oh + y) * ow + x;
          d[o] = s[best];
          if (arg) (*arg)[static_cast<std::size_t>(c * ocols) + o] = best;
        }
      }
    }
  }
  return out;
}

Mat flatten(const Mat& p, int n) {
  const Eigen::Index hw = p.cols() / n;
  Mat x(p.rows() * hw, n);
  for (Eigen::Index c = 0; c < p.rows(); ++c)
    for (int b = 0; b < n; ++b)
      for (Eigen::Index q = 0; q < hw; ++q) x(c * hw + q, b) = p(c, b * hw + q);
  return x;
}

Mat unflatten(const Mat& x, Eigen::Index channels, int n) {
  const Eigen::Index hw = x.rows() / channels;
  Mat p(channels, hw * n);
  for (Eigen::Index c = 0; c < channels; ++c)
    for (int b = 0; b < n; ++b)
      for (Eigen::Index q = 0; q < hw; ++q) p(c, b * hw + q) = x(c * hw + q, b);
  return p;
}

}  // namespace

struct ConvNet::Cache {
  int n = 0;
  std::vector<Mat> cols;    // im2col inputs per conv block
  std::vector<Mat> pre;     // conv outputs before ReLU
  std::vector<std::vector<int>> arg;
  Mat flat;
  Mat hidden_pre;
  Mat hidden;
};

ConvNet::ConvNet(const NetworkShape& shape, std::uint64_t seed) : shape_(shape) {
  shape_.validate();
  Rng rng(derive_seed(seed, "convnet_init"));
  int c_in = shape_.channels;
  for (int c_out : shape_.conv_channels) {
    params_.push_back(he_init(c_out, c_in * 9, c_in * 9, rng));
    params_.push_back(Mat::Zero(c_out, 1));
    c_in = c_out;
  }
  const int div = 1 << shape_.conv_channels.size();
  const int flat = c_in * (shape_.height / div) * (shape_.width / div);
  params_.push_back(he_init(shape_.hidden, flat, flat, rng));
  params_.push_back(Mat::Zero(shape_.hidden, 1));
  params_.push_back(he_init(shape_.num_classes, shape_.hidden, shape_.hidden, rng) * 0.5f);
  params_.push_back(Mat::Zero(shape_.num_classes, 1));
}

Mat ConvNet::to_input(std::span<const ImageBuffer* const> images) const {
  const int h = shape_.height, w = shape_.width, ch = shape_.channels;
  const auto n = static_cast<Eigen::Index>(images.size());
  const Eigen::Index plane = static_cast<Eigen::Index>(h) * w;
  Mat in(ch, n * plane);
  for (Eigen::Index b = 0; b < n; ++b) {
    const ImageBuffer* src = images[static_cast<std::size_t>(b)];
    ImageBuffer converted;
    if (src->height() != h || src->width() != w)
      throw DimensionError("network expects " + std::to_string(h) + "x" + std::to_string(w) + " input");
    if (src->channels() != ch) {
      if (ch == 3 && src->channels() == 1) {
        converted = to_rgb(*src);
        src = &converted;
      } else {
        throw DimensionError("network input channel mismatch");
      }
    }
    const auto* px = src->bytes().data();
    for (int c = 0; c < ch; ++c) {
      float* dst = in.data() + c * in.cols() + b * plane;
      for (Eigen::Index i = 0; i < plane; ++i) dst[i] = static_cast<float>(px[i * ch + c]) / 63.75f - 2.0f;
    }
  }
  return in;
}

Mat ConvNet::run(const Mat& input, Cache* cache, bool stop_at_hidden) const {
  if (params_.empty()) throw ConfigError("network has no parameters");
  const int n = static_cast<int>(input.cols() / (static_cast<Eigen::Index>(shape_.height) * shape_.width));
  int h = shape_.height, w = shape_.width, c_in = shape_.channels;
  Mat a = input;
  if (cache) {
    cache->n = n;
    cache->cols.clear();
    cache->pre.clear();
    cache->arg.clear();
  }
  for (std::size_t l = 0; l < shape_.conv_channels.size(); ++l) {
    const Mat& W = params_[2 * l];
    const Mat& bias = params_[2 * l + 1];
    Mat col = im2col(a, c_in, n, h, w);
    Mat z = W * col;
    z.colwise() += bias.col(0);
    Mat r = z.cwiseMax(0.0f);
    std::vector<int> arg;
    a = maxpool(r, n, h, w, cache ? &arg : nullptr);
    if (cache) {
      cache->cols.push_back(std::move(col));
      cache->pre.push_back(std::move(z));
      cache->arg.push_back(std::move(arg));
    }
    c_in = shape_.conv_channels[l];
    h /= 2;
    w /= 2;
  }
  const std::size_t k = 2 * shape_.conv_channels.size();
  Mat flat = flatten(a, n);
  Mat z1 = params_[k] * flat;
  z1.colwise() += params_[k + 1].col(0);
  Mat a1 = z1.cwiseMax(0.0f);
  if (cache) {
    cache->flat = std::move(flat);
    cache->hidden_pre = std::move(z1);
    cache->hidden = a1;
  }
  if (stop_at_hidden) return a1;
  Mat out = params_[k + 2] * a1;
  out.colwise() += params_[k + 3].col(0);
  return out;
}

Mat ConvNet::forward(const Mat& input) const { return run(input, nullptr, false); }

Mat ConvNet::logits(std::span<const ImageBuffer* const> images) const {
  Mat out(shape_.num_classes, static_cast<Eigen::Index>(images.size()));
  constexpr std::size_t kChunk = 256;
  for (std::size_t i = 0; i < images.size(); i += kChunk) {
    const auto part = images.subspan(i, std::min(kChunk, images.size() - i));
    out.middleCols(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(part.size())) = forward(to_input(part));
  }
  return out;
}

Mat ConvNet::features(std::span<const ImageBuffer* const> images) const {
  return run(to_input(images), nullptr, true);
}

double ConvNet::loss_and_gradients(const Mat& input, std::span<const int> labels, std::vector<Mat>& grads) const {
  Cache cache;
  const Mat z = run(input, &cache, false);
  const int n = cache.n;
  if (static_cast<std::size_t>(n) != labels.size()) throw DimensionError("label count does not match batch");

  Mat dz(z.rows(), z.cols());
  double loss = 0.0;
  for (int b = 0; b < n; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= shape_.num_classes) throw ConfigError("label out of range");
    const float mx = z.col(b).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < z.rows(); ++c) sum += std::exp(static_cast<double>(z(c, b) - mx));
    for (Eigen::Index c = 0; c < z.rows(); ++c) {
      const double p = std::exp(static_cast<double>(z(c, b) - mx)) / sum;
      dz(c, b) = static_cast<float>((p - (c == y ? 1.0 : 0.0)) / n);
    }
    loss -= static_cast<double>(z(y, b) - mx) - std::log(sum);
  }
  loss /= n;

  grads.resize(params_.size());
  const std::size_t k = 2 * shape_.conv_channels.size();
  grads[k + 2] = dz * cache.hidden.transpose();
  grads[k + 3] = dz.rowwise().sum();
  Mat dh = params_[k + 2].transpose() * dz;
  dh = dh.cwiseProduct((cache.hidden_pre.array() > 0.0f).cast<float>().matrix());
  grads[k] = dh * cache.flat.transpose();
  grads[k + 1] = dh.rowwise().sum();
  Mat dflat = params_[k].transpose() * dh;

  const std::size_t layers = shape_.conv_channels.size();
  int h = shape_.height >> layers, w = shape_.width >> layers;
  Mat dpool = unflatten(dflat, shape_.conv_channels.back(), n);
  for (std::size_t li = layers; li-- > 0;) {
    const int fh = h * 2, fw = w * 2;
    const Mat& pre = cache.pre[li];
    Mat dr = Mat::Zero(pre.rows(), pre.cols());
    const auto& arg = cache.arg[li];
    for (Eigen::Index c = 0; c < dpool.rows(); ++c) {
      const float* g = dpool.data() + c * dpool.cols();
      float* d = dr.data() + c * dr.cols();
      const int* a = arg.data() + c * dpool.cols();
      for (Eigen::Index o = 0; o < dpool.cols(); ++o) d[a[o]] += g[o];
    }
    Mat dzc = dr.cwiseProduct((pre.array() > 0.0f).cast<float>().matrix());
    grads[2 * li] = dzc * cache.cols[li].transpose();
    grads[2 * li + 1] = dzc.rowwise().sum();
    if (li > 0) {
      const int c_in = shape_.conv_channels[li - 1];
      Mat dcol = params_[2 * li].transpose() * dzc;
      dpool = col2im(dcol, c_in, n, fh, fw);
    }
    h = fh;
    w = fw;
  }
  return loss;
}

namespace {

constexpr char kMagic[8] = {'V', 'S', 'S', 'C', 'N', 'E', 'T', '1'};

void put_i32(std::ostream& os, std::int32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::int32_t get_i32(std::istream& is) {
  std::int32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw DecodeError("truncated model file");
  return v;
}

}  // namespace

void ConvNet::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write model to " + path.string());
  os.write(kMagic, sizeof kMagic);
  put_i32(os, shape_.height);
  put_i32(os, shape_.width);
  put_i32(os, shape_.channels);
  put_i32(os, shape_.num_classes);
  put_i32(os, shape_.hidden);
  put_i32(os, static_cast<std::int32_t>(shape_.conv_channels.size()));
  for (int c : shape_.conv_channels) put_i32(os, c);
  put_i32(os, static_cast<std::int32_t>(params_.size()));
  for (const auto& p : params_) {
    put_i32(os, static_cast<std::int32_t>(p.rows()));
    put_i32(os, static_cast<std::int32_t>(p.cols()));
    os.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(sizeof(float) * p.size()));
  }
  if (!os) throw Error("failed writing model to " + path.string());
}

ConvNet ConvNet::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open model " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw DecodeError("not a model file: " + path.string());
  NetworkShape shape;
  shape.height = get_i32(is);
  shape.width = get_i32(is);
  shape.channels = get_i32(is);
  shape.num_classes = get_i32(is);
  shape.hidden = get_i32(is);
  const int blocks = get_i32(is);
  if (blocks <= 0 || blocks > 16) throw DecodeError("corrupt model header");
  shape.conv_channels.resize(static_cast<std::size_t>(blocks));
  for (auto& c : shape.conv_channels) c = get_i32(is);
  ConvNet net(shape, 0);
  const int count = get_i32(is);
  if (count != static_cast<int>(net.params_.size())) throw DecodeError("model parameter count mismatch");
  for (auto& p : net.params_) {
    const int r = get_i32(is), c = get_i32(is);
    if (r != p.rows() || c != p.cols()) throw DecodeError("model parameter shape mismatch");
    if (!is.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(sizeof(float) * p.size())))
      throw DecodeError("truncated model file");
  }
  return net;
}

}  // namespace vssc::eval
