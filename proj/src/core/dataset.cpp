#include "vssc/core/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "vssc/core/errors.hpp"
#include "vssc/core/hash.hpp"
#include "vssc/core/random.hpp"

namespace vssc {

BoundingBox clamp_to_image(const BoundingBox& box, int height, int width) {
  BoundingBox out = box;
  const double x0 = std::clamp(box.a, 0.0, static_cast<double>(width));
  const double y0 = std::clamp(box.b, 0.0, static_cast<double>(height));
  const double x1 = std::clamp(box.a + box.w, 0.0, static_cast<double>(width));
  const double y1 = std::clamp(box.b + box.h, 0.0, static_cast<double>(height));
  out.a = x0;
  out.b = y0;
  out.w = std::max(0.0, x1 - x0);
  out.h = std::max(0.0, y1 - y0);
  return out;
}

void LabeledDataset::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& s : samples) {
    if (!seen.insert(s.id).second) throw ConfigError("duplicate sample id '" + s.id + "'");
    if (s.label < 0 || s.label >= num_classes) {
      throw ConfigError("sample '" + s.id + "' label " + std::to_string(s.label) +
                        " outside [0," + std::to_string(num_classes) + ")");
    }
  }
}

void AttackConfig::validate() const {
  if (!(poisoning_ratio >= 0.0 && poisoning_ratio <= 1.0))
    throw ConfigError("poisoning_ratio must lie in [0,1]");
  if (!(oversample_factor >= 1.0)) throw ConfigError("oversample_factor must be >= 1");
  if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
}

std::size_t PoisonManifest::poisoned_count() const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) {
    return r.final_status == PoisonStatus::kPoisoned;
  }));
}

std::size_t target_poison_count(std::size_t n, double ratio) {
  // The epsilon guards values like 0.07 * 100 landing at 6.999999.
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

IndexSelection select_poison_indices(const LabeledDataset& dataset, const AttackConfig& config) {
  config.validate();
  if (dataset.samples.empty()) throw ConfigError("cannot select poison indices from an empty dataset");

  IndexSelection sel;
  sel.requested = target_poison_count(dataset.size(),
                                      config.poisoning_ratio * config.oversample_factor);
  sel.requested = std::min(sel.requested, dataset.size());
  if (sel.requested == 0) return sel;

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const int label = dataset.samples[i].label;
    if (label == config.target_label) continue;
    if (std::find(config.excluded_classes.begin(), config.excluded_classes.end(), label) !=
        config.excluded_classes.end())
      continue;
    eligible.push_back(i);
  }

  Rng rng(derive_seed(config.seed, "select_poison_indices"));
  rng.shuffle(eligible.begin(), eligible.end());
  if (eligible.size() < sel.requested) {
    sel.undersized = true;
  } else {
    eligible.resize(sel.requested);
  }
  sel.indices = std::move(eligible);
  return sel;
}

std::pair<LabeledDataset, PoisonManifest> assemble_poisoned_dataset(
    const LabeledDataset& dataset,
    const std::vector<std::pair<std::string, ImageBuffer>>& poisoned,
    const AttackConfig& config,
    std::vector<PoisonRecord> records) {
  config.validate();
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_id.emplace(dataset.samples[i].id, i);

  std::unordered_map<std::size_t, const ImageBuffer*> replacement;
  for (const auto& [id, image] : poisoned) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ConfigError("poisoned id '" + id + "' not in dataset");
    if (!replacement.emplace(it->second, &image).second)
      throw ConfigError("duplicate poisoned id '" + id + "'");
    if (!image.same_shape(dataset.samples[it->second].image))
      throw DimensionError("poisoned image for '" + id + "' changes the image shape");
  }

  LabeledDataset out = dataset;
  for (const auto& [index, image] : replacement) {
    out.samples[index].image = *image;
    out.samples[index].label = config.target_label;
  }

  PoisonManifest manifest;
  manifest.dataset_size = dataset.size();
  manifest.target_label = config.target_label;
  manifest.target_ratio = config.poisoning_ratio;
  manifest.actual_ratio =
      dataset.size() == 0 ? 0.0
                          : static_cast<double>(replacement.size()) / static_cast<double>(dataset.size());
  manifest.zero_poisoned = replacement.empty();
  if (records.empty()) {
    for (const auto& [id, image] : poisoned) {
      PoisonRecord rec;
      rec.sample_id = id;
      rec.sample_index = by_id.at(id);
      rec.attempts_used = 1;
      rec.attempts.push_back(AttemptRecord{});
      rec.final_status = PoisonStatus::kPoisoned;
      rec.seed = config.seed;
      records.push_back(std::move(rec));
    }
  }
  manifest.records = std::move(records);
  manifest.dataset_fingerprint = dataset_fingerprint(out);
  return {std::move(out), std::move(manifest)};
}

namespace {

void hash_image(Sha256& h, const ImageBuffer& img) {
  h.update_u64(static_cast<std::uint64_t>(img.height()));
  h.update_u64(static_cast<std::uint64_t>(img.width()));
  h.update_u64(static_cast<std::uint64_t>(img.channels()));
  h.update(img.data());
}

}  // namespace

std::string dataset_fingerprint(const LabeledDataset& dataset) {
  Sha256 h;
  h.update_u64(dataset.size());
  for (const auto& s : dataset.samples) {
    h.update_u64(s.id.size()).update(s.id);
    h.update_u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(s.label)));
    hash_image(h, s.image);
  }
  return h.hex_digest();
}

std::string dataset_fingerprint(const DetectionDataset& dataset) {
  Sha256 h;
  h.update_u64(dataset.samples.size());
  for (const auto& s : dataset.samples) {
    h.update_u64(s.id.size()).update(s.id);
    h.update_u64(s.boxes.size());
    for (const auto& b : s.boxes) {
      for (double v : {b.a, b.b, b.w, b.h}) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h.update_u64(bits);
      }
      h.update_u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(b.c)));
    }
    hash_image(h, s.image);
  }
  return h.hex_digest();
}

}  // namespace vssc
