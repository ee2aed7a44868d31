#include "vssc/cli/config.hpp"

#include <fstream>
#include <set>

#include "vssc/core/errors.hpp"
#include "vssc/core/hash.hpp"
#include "vssc/core/png_io.hpp"
#include "vssc/core/random.hpp"

namespace vssc::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Object reader that rejects keys nobody asked for.
class Obj {
 public:
  Obj(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return as<T>(key);
  }

  template <class T>
  T req(const std::string& key) {
    if (!has(key)) throw ConfigError(where_ + ": missing required key '" + key + "'");
    return as<T>(key);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  template <class T>
  T as(const std::string& key) {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key) + ": wrong type");
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

fs::path existing(const fs::path& base, const std::string& p, const std::string& what) {
  auto path = resolve(base, p);
  if (!fs::exists(path)) throw ConfigError(what + " does not exist: " + path.string());
  return path;
}

std::string image_digest(const ImageBuffer& img) {
  Sha256 h;
  h.update_u64(static_cast<std::uint64_t>(img.height()))
      .update_u64(static_cast<std::uint64_t>(img.width()))
      .update_u64(static_cast<std::uint64_t>(img.channels()));
  h.update(img.data());
  return h.hex_digest();
}

}  // namespace

void apply_overrides(json& config, const Overrides& o) {
  if (!config.is_object()) throw ConfigError("config root must be an object");
  if (o.seed) config["seed"] = *o.seed;
  if (o.pratio) {
    if (!config.contains("attack") || config["attack"].is_null()) config["attack"] = json::object();
    config["attack"]["poisoning_ratio"] = *o.pratio;
  }
  if (o.trigger) config["trigger"] = trigger_json_from_arg(*o.trigger);
  if (o.backend) {
    if (!config.contains("backends") || config["backends"].is_null()) config["backends"] = json::object();
    auto& edit = config["backends"]["edit"];
    if (!edit.is_object()) edit = json::object();
    edit["type"] = *o.backend;
  }
  if (o.output_dir) config["output_dir"] = o.output_dir->string();
}

json trigger_json_from_arg(const std::string& arg) {
  static const std::set<std::string> baselines{"badnets", "blended", "sig", "wanet", "bpp", "trojannn"};
  if (baselines.count(arg)) return {{"type", arg}};
  const std::string prefix = "semantic:";
  const std::string text = arg.rfind(prefix, 0) == 0 ? arg.substr(prefix.size()) : arg;
  return {{"type", "semantic"}, {"text", text}};
}

namespace {

// Resolved configs record image triggers by digest; accept that form back.
void check_digest(Obj& o, const char* key, const ImageBuffer& image) {
  if (!o.has(key)) return;
  if (o.req<std::string>(key) != image_digest(image))
    throw ConfigError(std::string("trigger: ") + key + " does not match the trigger image");
}

}  // namespace

TriggerSpec parse_trigger(const json& j, const fs::path& base_dir) {
  Obj o(j, "trigger");
  const auto type = o.req<std::string>("type");
  TriggerSpec spec;
  if (type == "semantic") {
    spec = TriggerSpec::semantic(o.req<std::string>("text"), o.get<std::string>("backend_id", "local"));
  } else if (type == "badnets") {
    triggers::BadNetsParams p;
    p.patch_size = o.get("patch_size", p.patch_size);
    p.offset_right = o.get("offset_right", p.offset_right);
    p.offset_bottom = o.get("offset_bottom", p.offset_bottom);
    spec = TriggerSpec::from_baseline(p);
  } else if (type == "blended") {
    triggers::BlendedParams p;
    p.alpha = o.get("alpha", p.alpha);
    p.key_image = o.has("key_image") ? read_png(existing(base_dir, o.req<std::string>("key_image"), "blend key"))
                                     : triggers::default_blend_key(224, 224);
    check_digest(o, "key_sha256", p.key_image);
    spec = TriggerSpec::from_baseline(p);
  } else if (type == "sig") {
    triggers::SigParams p;
    p.delta = o.get("delta", p.delta);
    p.freq = o.get("freq", p.freq);
    spec = TriggerSpec::from_baseline(p);
  } else if (type == "wanet") {
    triggers::WaNetParams p;
    p.grid_k = o.get("k", p.grid_k);
    p.strength = o.get("strength", p.strength);
    p.seed = o.get<std::uint64_t>("seed", p.seed);
    spec = TriggerSpec::from_baseline(p);
  } else if (type == "bpp") {
    triggers::BppParams p;
    p.bit_depth = o.get("bit_depth", p.bit_depth);
    p.dithering = o.get("dithering", p.dithering);
    spec = TriggerSpec::from_baseline(p);
  } else if (type == "trojannn") {
    if (o.has("trigger_image")) {
      const auto rgba = decode_png_rgba(read_file_bytes(existing(base_dir, o.req<std::string>("trigger_image"),
                                                                 "trojan trigger image")));
      triggers::TrojanStampParams p;
      p.trigger_image = rgba.rgb;
      p.mask = rgba.alpha;
      check_digest(o, "trigger_sha256", p.trigger_image);
      spec = TriggerSpec::from_baseline(p);
    } else {
      auto p = triggers::default_trojan_stamp(224, 224);
      check_digest(o, "trigger_sha256", p.trigger_image);
      spec = TriggerSpec::from_baseline(std::move(p));
    }
  } else {
    throw ConfigError("trigger: unknown type '" + type + "'");
  }
  o.finish();
  spec.validate();
  return spec;
}

json trigger_to_json(const TriggerSpec& t) {
  if (t.is_semantic()) return {{"type", "semantic"}, {"text", t.text}, {"backend_id", t.backend_id}};
  json j{{"type", baseline_name(*t.baseline)}};
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, triggers::BadNetsParams>) {
          j["patch_size"] = p.patch_size;
          j["offset_right"] = p.offset_right;
          j["offset_bottom"] = p.offset_bottom;
        } else if constexpr (std::is_same_v<P, triggers::BlendedParams>) {
          j["alpha"] = p.alpha;
          j["key_sha256"] = image_digest(p.key_image);
        } else if constexpr (std::is_same_v<P, triggers::SigParams>) {
          j["delta"] = p.delta;
          j["freq"] = p.freq;
        } else if constexpr (std::is_same_v<P, triggers::WaNetParams>) {
          j["k"] = p.grid_k;
          j["strength"] = p.strength;
          j["seed"] = p.seed;
        } else if constexpr (std::is_same_v<P, triggers::BppParams>) {
          j["bit_depth"] = p.bit_depth;
          j["dithering"] = p.dithering;
        } else {
          j["trigger_sha256"] = image_digest(p.trigger_image);
        }
      },
      *t.baseline);
  return j;
}

distort::DistortionConfig parse_distortion(const json& j) {
  Obj o(j, "distortion");
  const auto kind = distort::parse_kind(o.req<std::string>("kind"));
  distort::DistortionConfig d;
  d.kind = kind;
  d.seed = o.get<std::uint64_t>("seed", 0);
  switch (kind) {
    case distort::DistortionKind::kBlur: d.blur_kernel = o.req<int>("kernel"); break;
    case distort::DistortionKind::kJpeg: d.jpeg_quality = o.req<int>("quality"); break;
    case distort::DistortionKind::kNoise:
      d.noise_sigma = o.req<double>("sigma");
      d.noise_mean = o.get("mean", 0.0);
      break;
    case distort::DistortionKind::kPerspective: d.perspective_jitter = o.req<double>("jitter"); break;
    case distort::DistortionKind::kColorJitter: d.color_jitter = o.req<double>("jitter"); break;
    case distort::DistortionKind::kD2pChain:
      if (o.has("chain")) {
        const auto& arr = o.raw("chain");
        if (!arr.is_array()) throw ConfigError("distortion.chain must be an array");
        for (const auto& stage : arr) d.chain.push_back(parse_distortion(stage));
      } else {
        d.chain = distort::default_d2p_chain(d.seed).chain;
      }
      break;
  }
  o.finish();
  d.validate();
  return d;
}

json distortion_to_json(const distort::DistortionConfig& d) {
  json j{{"kind", distort::kind_name(d.kind)}, {"seed", d.seed}};
  switch (d.kind) {
    case distort::DistortionKind::kBlur: j["kernel"] = d.blur_kernel; break;
    case distort::DistortionKind::kJpeg: j["quality"] = d.jpeg_quality; break;
    case distort::DistortionKind::kNoise:
      j["sigma"] = d.noise_sigma;
      j["mean"] = d.noise_mean;
      break;
    case distort::DistortionKind::kPerspective: j["jitter"] = d.perspective_jitter; break;
    case distort::DistortionKind::kColorJitter: j["jitter"] = d.color_jitter; break;
    case distort::DistortionKind::kD2pChain: {
      j["chain"] = json::array();
      for (const auto& s : d.chain) j["chain"].push_back(distortion_to_json(s));
      break;
    }
  }
  return j;
}

namespace {

BackendDecl parse_backend(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  if (!j.contains("type") || !j.at("type").is_string()) throw ConfigError(where + ": missing 'type'");
  BackendDecl b;
  b.type = j.at("type").get<std::string>();
  b.params = j;
  b.params.erase("type");
  return b;
}

eval::SynthConfig parse_synth(const json& j, std::uint64_t root) {
  Obj o(j, "dataset.synthetic");
  eval::SynthConfig s;
  s.num_classes = o.get("num_classes", s.num_classes);
  s.train_per_class = o.get("train_per_class", s.train_per_class);
  s.test_per_class = o.get("test_per_class", s.test_per_class);
  s.size = o.get("size", s.size);
  s.noise_sigma = o.get("noise_sigma", s.noise_sigma);
  s.seed = o.get<std::uint64_t>("seed", derive_seed(root, "dataset"));
  o.finish();
  s.validate();
  return s;
}

}  // namespace

RunConfig parse_config(const json& config, const fs::path& base_dir) {
  Obj root(config, "config");
  RunConfig rc;
  rc.base_dir = base_dir;
  rc.seed = root.get<std::uint64_t>("seed", 0);
  rc.task = root.get<std::string>("task", rc.task);
  if (rc.task != "classification" && rc.task != "detection" && rc.task != "verification")
    throw ConfigError("config.task must be classification, detection or verification");
  rc.output_dir = resolve(base_dir, root.req<std::string>("output_dir"));

  if (root.has("dataset")) {
    Obj d(root.raw("dataset"), "dataset");
    if (d.has("train")) rc.dataset.train = existing(base_dir, d.req<std::string>("train"), "train dataset");
    if (d.has("test")) rc.dataset.test = existing(base_dir, d.req<std::string>("test"), "test dataset");
    if (d.has("synthetic")) rc.dataset.synthetic = parse_synth(d.raw("synthetic"), rc.seed);
    d.finish();
    if (rc.dataset.synthetic && (!rc.dataset.train.empty() || !rc.dataset.test.empty()))
      throw ConfigError("dataset: give either paths or a synthetic block, not both");
  }
  if (root.has("class_names")) rc.class_names = root.req<std::vector<std::string>>("class_names");

  if (root.has("attack")) {
    Obj a(root.raw("attack"), "attack");
    rc.attack.target_label = a.get("target_label", rc.attack.target_label);
    rc.attack.poisoning_ratio = a.get("poisoning_ratio", rc.attack.poisoning_ratio);
    rc.attack.oversample_factor = a.get("oversample_factor", rc.attack.oversample_factor);
    rc.attack.max_attempts = a.get("max_attempts", rc.attack.max_attempts);
    rc.attack.seed = a.get<std::uint64_t>("seed", derive_seed(rc.seed, "attack"));
    rc.attack.excluded_classes = a.get("excluded_classes", rc.attack.excluded_classes);
    a.finish();
  } else {
    rc.attack.seed = derive_seed(rc.seed, "attack");
  }
  rc.attack.validate();

  if (root.has("trigger")) rc.trigger = parse_trigger(root.raw("trigger"), base_dir);

  rc.selection.seed = derive_seed(rc.seed, "selection");
  if (root.has("selection")) {
    Obj s(root.raw("selection"), "selection");
    rc.selection.isr_threshold = s.get("isr_threshold", rc.selection.isr_threshold);
    rc.selection.eval_images_per_class = s.get("eval_images_per_class", rc.selection.eval_images_per_class);
    rc.selection.instruction_template = s.get("instruction_template", rc.selection.instruction_template);
    rc.selection.edit_prompt_template = s.get("edit_prompt_template", rc.selection.edit_prompt_template);
    rc.selection.seed = s.get<std::uint64_t>("seed", rc.selection.seed);
    rc.criteria.templates = s.get("criteria", rc.criteria.templates);
    s.finish();
  }
  rc.selection.validate();
  rc.criteria.validate();
  rc.generation.edit_prompt_template = rc.selection.edit_prompt_template;

  if (root.has("generation")) {
    Obj g(root.raw("generation"), "generation");
    rc.generation.parallelism = g.get("parallelism", rc.generation.parallelism);
    rc.generation.qa_enabled = g.get("qa_at_inference", rc.generation.qa_enabled);
    g.finish();
    if (rc.generation.parallelism < 1) throw ConfigError("generation.parallelism must be at least 1");
  }

  if (root.has("backends")) {
    Obj b(root.raw("backends"), "backends");
    if (b.has("chat")) rc.backends.chat = parse_backend(b.raw("chat"), "backends.chat");
    if (b.has("edit")) rc.backends.edit = parse_backend(b.raw("edit"), "backends.edit");
    if (b.has("qa")) rc.backends.qa = parse_backend(b.raw("qa"), "backends.qa");
    b.finish();
  }

  if (root.has("sweep")) {
    const auto& arr = root.raw("sweep");
    if (!arr.is_array()) throw ConfigError("sweep must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      auto d = parse_distortion(arr[i]);
      if (!arr[i].contains("seed")) {
        d.seed = derive_seed(derive_seed(rc.seed, "sweep"), i);
        if (d.kind == distort::DistortionKind::kD2pChain && !arr[i].contains("chain"))
          d = distort::default_d2p_chain(d.seed);
      }
      d.validate_sweep_entry();
      rc.sweep.push_back(std::move(d));
    }
  }

  rc.train.seed = derive_seed(rc.seed, "train");
  if (root.has("train")) {
    Obj t(root.raw("train"), "train");
    rc.train.epochs = t.get("epochs", rc.train.epochs);
    rc.train.batch_size = t.get("batch_size", rc.train.batch_size);
    rc.train.momentum = t.get("momentum", rc.train.momentum);
    rc.train.weight_decay = t.get("weight_decay", rc.train.weight_decay);
    rc.train.augment_flip = t.get("augment_flip", rc.train.augment_flip);
    rc.train.augment_crop = t.get("augment_crop", rc.train.augment_crop);
    rc.train.seed = t.get<std::uint64_t>("seed", rc.train.seed);
    if (t.has("lr")) {
      Obj l(t.raw("lr"), "train.lr");
      rc.train.lr.kind = eval::parse_schedule(l.get<std::string>("schedule", "cosine"));
      rc.train.lr.base_lr = l.get("base", rc.train.lr.base_lr);
      rc.train.lr.step_epochs = l.get("step_epochs", rc.train.lr.step_epochs);
      rc.train.lr.gamma = l.get("gamma", rc.train.lr.gamma);
      rc.train.lr.warmup_epochs = l.get("warmup_epochs", rc.train.lr.warmup_epochs);
      l.finish();
    }
    if (t.has("network")) {
      Obj n(t.raw("network"), "train.network");
      rc.train.shape.conv_channels = n.get("conv_channels", rc.train.shape.conv_channels);
      rc.train.shape.hidden = n.get("hidden", rc.train.shape.hidden);
      n.finish();
    }
    t.finish();
  }
  rc.train.validate();

  rc.inference_seed = root.get<std::uint64_t>("inference_seed", derive_seed(rc.seed, "inference"));
  root.finish();
  return rc;
}

RunConfig load_config(const fs::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  apply_overrides(j, overrides);
  return parse_config(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

json to_json(const RunConfig& rc) {
  json j;
  j["task"] = rc.task;
  j["seed"] = rc.seed;
  j["output_dir"] = rc.output_dir.string();
  json ds = json::object();
  if (!rc.dataset.train.empty()) ds["train"] = rc.dataset.train.string();
  if (!rc.dataset.test.empty()) ds["test"] = rc.dataset.test.string();
  if (const auto& s = rc.dataset.synthetic) {
    ds["synthetic"] = {{"num_classes", s->num_classes}, {"train_per_class", s->train_per_class},
                       {"test_per_class", s->test_per_class}, {"size", s->size},
                       {"noise_sigma", s->noise_sigma}, {"seed", s->seed}};
  }
  j["dataset"] = ds;
  j["class_names"] = rc.class_names;
  j["attack"] = {{"target_label", rc.attack.target_label},     {"poisoning_ratio", rc.attack.poisoning_ratio},
                 {"oversample_factor", rc.attack.oversample_factor}, {"max_attempts", rc.attack.max_attempts},
                 {"seed", rc.attack.seed},                     {"excluded_classes", rc.attack.excluded_classes}};
  j["trigger"] = rc.trigger ? trigger_to_json(*rc.trigger) : json(nullptr);
  j["selection"] = {{"isr_threshold", rc.selection.isr_threshold},
                    {"eval_images_per_class", rc.selection.eval_images_per_class},
                    {"instruction_template", rc.selection.instruction_template},
                    {"edit_prompt_template", rc.selection.edit_prompt_template},
                    {"seed", rc.selection.seed},
                    {"criteria", rc.criteria.templates}};
  j["generation"] = {{"parallelism", rc.generation.parallelism}, {"qa_at_inference", rc.generation.qa_enabled}};
  auto backend = [](const BackendDecl& b) {
    json o = b.params;
    o["type"] = b.type;
    return o;
  };
  j["backends"] = {{"chat", backend(rc.backends.chat)}, {"edit", backend(rc.backends.edit)},
                   {"qa", backend(rc.backends.qa)}};
  j["sweep"] = json::array();
  for (const auto& d : rc.sweep) j["sweep"].push_back(distortion_to_json(d));
  j["train"] = {{"epochs", rc.train.epochs},
                {"batch_size", rc.train.batch_size},
                {"momentum", rc.train.momentum},
                {"weight_decay", rc.train.weight_decay},
                {"augment_flip", rc.train.augment_flip},
                {"augment_crop", rc.train.augment_crop},
                {"seed", rc.train.seed},
                {"lr",
                 {{"schedule", eval::schedule_name(rc.train.lr.kind)},
                  {"base", rc.train.lr.base_lr},
                  {"step_epochs", rc.train.lr.step_epochs},
                  {"gamma", rc.train.lr.gamma},
                  {"warmup_epochs", rc.train.lr.warmup_epochs}}},
                {"network", {{"conv_channels", rc.train.shape.conv_channels}, {"hidden", rc.train.shape.hidden}}}};
  j["inference_seed"] = rc.inference_seed;
  return j;
}

std::string config_hash(const RunConfig& config) {
  // nlohmann::json keeps object keys sorted, so dump() is canonical.
  json semantic = to_json(config);
  semantic.erase("output_dir");
  return sha256_hex(semantic.dump());
}

}  // namespace vssc::cli
