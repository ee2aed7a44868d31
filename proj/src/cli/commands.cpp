#include "vssc/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vssc/cli/plot.hpp"
#include "vssc/core/dataset_io.hpp"
#include "vssc/core/hash.hpp"
#include "vssc/core/manifest_io.hpp"
#include "vssc/core/png_io.hpp"
#include "vssc/core/random.hpp"
#include "vssc/eval/classification.hpp"
#include "vssc/eval/scenario.hpp"
#include "vssc/eval/synth.hpp"
#include "vssc/eval/train.hpp"
#include "vssc/services/http_clients.hpp"
#include "vssc/services/local.hpp"

namespace vssc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- backends -------------------------------------------------------------

services::EndpointConfig endpoint_from(const json& p, const std::string& where) {
  services::EndpointConfig e;
  if (p.contains("url_env")) {
    const auto name = p.at("url_env").get<std::string>();
    const char* v = std::getenv(name.c_str());
    if (v == nullptr || *v == '\0') throw ConfigError(where + ": environment variable " + name + " is not set");
    e.url = v;
  } else if (p.contains("url")) {
    e.url = p.at("url").get<std::string>();
  } else {
    throw ConfigError(where + ": http backend needs 'url' or 'url_env'");
  }
  e.model = p.value("model", e.model);
  e.timeout_ms = p.value("timeout_ms", e.timeout_ms);
  e.max_retries = p.value("max_retries", e.max_retries);
  e.backoff_ms = p.value("backoff_ms", e.backoff_ms);
  e.backoff_cap_ms = p.value("backoff_cap_ms", e.backoff_cap_ms);
  e.max_request_bytes = p.value("max_request_bytes", e.max_request_bytes);
  e.api_key_env = p.value("api_key_env", e.api_key_env);
  e.rate_per_second = p.value("rate_per_second", e.rate_per_second);
  e.burst = p.value("burst", e.burst);
  return e;
}

std::string read_text(const fs::path& p) {
  const auto bytes = read_file_bytes(p);
  return {bytes.begin(), bytes.end()};
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

Services make_services(const Backends& b, const fs::path& base_dir, std::shared_ptr<services::AuditLog> audit) {
  Services s;
  s.audit = audit ? std::move(audit) : std::make_shared<services::AuditLog>();
  try {
    if (b.chat.type == "fixture") {
      std::string reply = b.chat.params.value("reply", "");
      if (b.chat.params.contains("reply_file")) reply = read_text(resolve(base_dir, b.chat.params["reply_file"]));
      s.chat = std::make_unique<services::FixtureChatClient>(reply);
    } else if (b.chat.type == "http") {
      s.chat = std::make_unique<services::HttpChatClient>(endpoint_from(b.chat.params, "backends.chat"), s.audit);
    } else {
      throw ConfigError("backends.chat: unknown type '" + b.chat.type + "'");
    }

    if (b.edit.type == "local") {
      const auto& p = b.edit.params;
      auto library = p.contains("sprite_dir")
                         ? services::SpriteLibrary::load_directory(resolve(base_dir, p["sprite_dir"]))
                         : services::SpriteLibrary::builtin();
      services::CompositorOptions o;
      o.min_scale = p.value("min_scale", o.min_scale);
      o.max_scale = p.value("max_scale", o.max_scale);
      o.max_rotation_deg = p.value("max_rotation_deg", o.max_rotation_deg);
      o.brightness_jitter = p.value("brightness_jitter", o.brightness_jitter);
      o.saliency_grid = p.value("saliency_grid", o.saliency_grid);
      s.edit = std::make_unique<services::LocalCompositor>(
          std::make_shared<const services::SpriteLibrary>(std::move(library)), o);
    } else if (b.edit.type == "echo") {
      s.edit = std::make_unique<services::EchoEditBackend>();
    } else if (b.edit.type == "http") {
      s.edit = std::make_unique<services::HttpEditBackend>(endpoint_from(b.edit.params, "backends.edit"), s.audit);
    } else {
      throw ConfigError("backends.edit: unknown type '" + b.edit.type + "'");
    }

    if (b.qa.type == "rule") {
      services::RuleVqaOptions o;
      o.min_coverage = b.qa.params.value("min_coverage", o.min_coverage);
      o.central_fraction = b.qa.params.value("central_fraction", o.central_fraction);
      o.max_central_overlap = b.qa.params.value("max_central_overlap", o.max_central_overlap);
      s.qa = std::make_unique<services::RuleVqa>(o);
    } else if (b.qa.type == "constant") {
      s.qa = std::make_unique<services::ConstantVqa>(b.qa.params.value("answer", true));
    } else if (b.qa.type == "isr_fixture") {
      json table = b.qa.params.value("isr", json::object());
      if (b.qa.params.contains("isr_file")) table = json::parse(read_text(resolve(base_dir, b.qa.params["isr_file"])));
      s.qa = std::make_unique<services::IsrFixtureVqa>(table.get<std::map<std::string, double>>());
    } else if (b.qa.type == "http") {
      s.qa = std::make_unique<services::HttpVqaClient>(endpoint_from(b.qa.params, "backends.qa"), s.audit);
    } else {
      throw ConfigError("backends.qa: unknown type '" + b.qa.type + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("backend declaration: ") + e.what());
  }
  return s;
}

namespace {

// ---- shared helpers ---------------------------------------------------------

struct Data {
  LabeledDataset train;
  LabeledDataset test;
  std::vector<std::string> class_names;
};

Data load_data(const RunConfig& rc, bool need_train, bool need_test) {
  Data d;
  if (rc.dataset.synthetic) {
    auto s = eval::make_shapes_dataset(*rc.dataset.synthetic);
    d.train = std::move(s.train);
    d.test = std::move(s.test);
    d.class_names = std::move(s.class_names);
  } else {
    if (need_train) {
      if (rc.dataset.train.empty()) throw ConfigError("config has no dataset.train");
      d.train = load_dataset(rc.dataset.train);
    }
    if (need_test) {
      if (rc.dataset.test.empty()) throw ConfigError("config has no dataset.test");
      d.test = load_dataset(rc.dataset.test);
    }
  }
  if (!rc.class_names.empty()) d.class_names = rc.class_names;
  return d;
}

struct Stage {
  const RunConfig& rc;
  Ledger ledger;
  LedgerEntry entry;

  Stage(const RunConfig& config, std::string command) : rc(config), ledger(config.output_dir) {
    entry.command = std::move(command);
    entry.config_hash = config_hash(config);
    entry.started = utc_timestamp();
  }

  void finish(const std::string& status) {
    entry.status = status;
    entry.finished = utc_timestamp();
    ledger.append(entry);
  }
};

void write_text(const fs::path& p, const std::string& text) {
  write_file_bytes(p, std::vector<std::uint8_t>(text.begin(), text.end()));
}

// The configured trigger, else the best qualified candidate of a previous
// select-trigger run.
TriggerSpec resolve_trigger(const RunConfig& rc, const Ledger& ledger, const std::string& backend_id) {
  if (rc.trigger) return *rc.trigger;
  const auto path = ledger.require("selection", "select-trigger");
  const auto j = json::parse(read_text(path));
  const json* best = nullptr;
  for (const auto& c : j.at("candidates"))
    if (c.at("status") == "qualified" && (!best || c.at("isr").get<double>() > best->at("isr").get<double>()))
      best = &c;
  if (!best) throw ConfigError("no trigger configured and the selection has no qualified candidate");
  return TriggerSpec::semantic(best->at("text").get<std::string>(), backend_id);
}

eval::Poisoner make_poisoner(const RunConfig& rc, const TriggerSpec& trigger, Services* svc) {
  if (!trigger.is_semantic()) {
    const auto params = *trigger.baseline;
    return [params](const Sample& s, std::size_t) { return std::optional<ImageBuffer>(apply_baseline(s.image, params)); };
  }
  return [&rc, trigger, svc](const Sample& s, std::size_t index) {
    auto r = pipeline::poison_inference_image(s.image, trigger, rc.criteria, *svc->edit, *svc->qa,
                                              rc.attack.max_attempts, derive_seed(rc.inference_seed, index),
                                              rc.generation);
    return r.image;
  };
}

json candidate_json(const pipeline::TriggerCandidate& c) {
  return {{"text", c.text},
          {"isr", c.isr ? json(*c.isr) : json(nullptr)},
          {"status", pipeline::status_name(c.status)},
          {"passed", c.passed},
          {"evaluated", c.evaluated}};
}

bool backend_down(const PoisonManifest& m) {
  bool any = false;
  for (const auto& r : m.records)
    for (const auto& a : r.attempts) {
      if (a.backend_error.empty()) return false;
      any = true;
    }
  return any;
}

}  // namespace

// ---- commands ---------------------------------------------------------------

int cmd_select_trigger(const RunConfig& rc, std::ostream& out) {
  RunLock lock(rc.output_dir);
  Stage stage(rc, "select-trigger");
  auto data = load_data(rc, true, false);
  if (data.class_names.empty()) throw ConfigError("select-trigger needs class_names (config) or a synthetic dataset");
  auto svc = make_services(rc.backends, rc.base_dir, std::make_shared<services::AuditLog>(rc.output_dir / "audit.jsonl"));

  auto coarse = pipeline::coarse_select(data.class_names, rc.selection, *svc.chat);
  if (!coarse.error.empty()) {
    stage.entry.details = {{"error", coarse.error}};
    stage.finish("failed");
    throw BackendError("chat backend failed: " + coarse.error);
  }
  std::vector<pipeline::TriggerCandidate> ranked;
  if (!coarse.candidates.empty())
    ranked = pipeline::fine_select(coarse.candidates, data.train, rc.selection, rc.criteria, *svc.edit, *svc.qa);

  json j;
  j["prompt"] = coarse.prompt;
  j["raw_reply"] = coarse.raw_reply;
  j["isr_threshold"] = rc.selection.isr_threshold;
  j["candidates"] = json::array();
  j["qualified"] = json::array();
  for (const auto& c : ranked) {
    j["candidates"].push_back(candidate_json(c));
    if (c.status == pipeline::CandidateStatus::kQualified) j["qualified"].push_back(c.text);
  }
  const std::string text = j.dump(2) + "\n";
  write_text(rc.output_dir / "selection.json", text);
  out << text;
  stage.entry.artifacts["selection"] = "selection.json";
  stage.entry.details = {{"qualified", j["qualified"]}, {"selection_sha256", sha256_hex(text)}};

  if (j["qualified"].empty()) {
    std::ostringstream table;
    table << "no qualified trigger (threshold " << rc.selection.isr_threshold << ")\n";
    for (const auto& c : ranked) table << "  " << c.text << "  isr=" << (c.isr ? *c.isr : 0.0) << "\n";
    std::cerr << table.str();
    stage.finish("failed");
    return kExitFailure;
  }
  stage.finish("ok");
  return kExitOk;
}

int cmd_poison(const RunConfig& rc, bool replay, std::ostream& out) {
  RunLock lock(rc.output_dir);
  Stage stage(rc, replay ? "poison --replay" : "poison");
  auto data = load_data(rc, true, false);
  auto svc = make_services(rc.backends, rc.base_dir, std::make_shared<services::AuditLog>(rc.output_dir / "audit.jsonl"));
  const auto trigger = resolve_trigger(rc, stage.ledger, svc.edit->id());

  if (replay) {
    const auto manifest = read_manifest(stage.ledger.require("manifest", "poison"));
    const auto poisoned = load_dataset(stage.ledger.require("poisoned_dataset", "poison"));
    const auto report = pipeline::replay_manifest(data.train, poisoned, manifest, trigger, svc.edit.get(),
                                                  rc.generation.edit_prompt_template);
    out << "replayed " << report.checked << " poisoned records, " << report.mismatched.size() << " mismatched\n";
    for (const auto& id : report.mismatched) out << "  mismatch: " << id << "\n";
    stage.entry.details = {{"checked", report.checked}, {"mismatched", report.mismatched}};
    stage.finish(report.identical() ? "ok" : "failed");
    return report.identical() ? kExitOk : kExitFailure;
  }

  pipeline::GenerationResult result =
      trigger.is_semantic()
          ? pipeline::generate_poisoned_dataset(data.train, trigger, rc.attack, rc.criteria, *svc.edit, *svc.qa,
                                                rc.generation)
          : pipeline::poison_with_baseline(data.train, trigger, rc.attack);

  save_dataset(result.dataset, rc.output_dir / "poisoned");
  write_manifest(result.manifest, rc.output_dir / "manifest.jsonl");
  stage.entry.artifacts["poisoned_dataset"] = "poisoned";
  stage.entry.artifacts["manifest"] = "manifest.jsonl";
  stage.entry.details = {{"trigger", trigger.describe()},
                         {"actual_ratio", result.manifest.actual_ratio},
                         {"poisoned", result.manifest.poisoned_count()},
                         {"dataset_size", result.manifest.dataset_size},
                         {"undersized", result.manifest.undersized},
                         {"fingerprint", result.manifest.dataset_fingerprint}};
  char ratio[32];
  std::snprintf(ratio, sizeof ratio, "%.4f", result.manifest.actual_ratio);
  out << "trigger " << trigger.describe() << "\n"
      << "actual_ratio " << ratio << " (" << result.manifest.poisoned_count() << "/" << result.manifest.dataset_size
      << ", target " << rc.attack.poisoning_ratio << ")\n";
  if (result.manifest.undersized) out << "warning: eligible pool smaller than the oversampled candidate count\n";

  if (result.warning) {
    const bool down = backend_down(result.manifest);
    stage.finish("warning");
    out << "warning: no sample could be poisoned" << (down ? " (every backend call failed)" : "") << "\n";
    return down ? kExitBackend : kExitZeroPoisoned;
  }
  stage.finish("ok");
  return kExitOk;
}

int cmd_train(const RunConfig& rc, bool clean, std::ostream& out) {
  RunLock lock(rc.output_dir);
  Stage stage(rc, clean ? "train --clean" : "train");
  auto data = load_data(rc, clean, true);
  LabeledDataset train = clean ? std::move(data.train) : load_dataset(stage.ledger.require("poisoned_dataset", "poison"));
  const auto result = eval::train_classifier(train, rc.train, data.test.size() ? &data.test : nullptr);
  result.model.save(rc.output_dir / "model.bin");
  json log;
  log["clean"] = clean;
  log["seed"] = result.seed;
  log["final_train_acc"] = result.final_train_acc;
  log["val_acc"] = result.val_acc ? json(*result.val_acc) : json(nullptr);
  log["history"] = json::array();
  for (const auto& e : result.history)
    log["history"].push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"train_acc", e.train_acc}, {"lr", e.lr}});
  write_text(rc.output_dir / "train_log.json", log.dump(2) + "\n");
  stage.entry.artifacts["model"] = "model.bin";
  stage.entry.artifacts["train_log"] = "train_log.json";
  stage.entry.details = {{"clean", clean}, {"final_train_acc", result.final_train_acc}, {"val_acc", log["val_acc"]}};
  out << "trained " << rc.train.epochs << " epochs, train acc " << result.final_train_acc;
  if (result.val_acc) out << ", test acc " << *result.val_acc;
  out << "\n";
  stage.finish("ok");
  return kExitOk;
}

int cmd_eval(const RunConfig& rc, std::ostream& out) {
  RunLock lock(rc.output_dir);
  Stage stage(rc, "eval");
  const auto model = eval::ConvNet::load(stage.ledger.require("model", "train"));
  auto data = load_data(rc, false, true);
  auto svc = make_services(rc.backends, rc.base_dir, std::make_shared<services::AuditLog>(rc.output_dir / "audit.jsonl"));
  const auto trigger = resolve_trigger(rc, stage.ledger, svc.edit->id());
  const auto poisoned = eval::build_poisoned_test_set(data.test, rc.attack.target_label, make_poisoner(rc, trigger, &svc));
  auto report = eval::eval_classification(model, data.test, poisoned, rc.attack.target_label);
  report.attack = trigger.describe();
  const auto text = eval::reports_to_json({report});
  write_text(rc.output_dir / "report.json", text);
  out << text;
  stage.entry.artifacts["report"] = "report.json";
  stage.entry.details = eval::to_json(report);
  stage.finish("ok");
  return kExitOk;
}

int cmd_sweep(const RunConfig& rc, bool plot, std::ostream& out) {
  RunLock lock(rc.output_dir);
  Stage stage(rc, "sweep");
  const auto model = eval::ConvNet::load(stage.ledger.require("model", "train"));
  auto data = load_data(rc, false, true);
  auto svc = make_services(rc.backends, rc.base_dir, std::make_shared<services::AuditLog>(rc.output_dir / "audit.jsonl"));
  const auto trigger = resolve_trigger(rc, stage.ledger, svc.edit->id());
  const auto reports = eval::run_scenario_sweep(model, data.test, make_poisoner(rc, trigger, &svc), rc.sweep,
                                                rc.attack.target_label, trigger.describe());
  write_text(rc.output_dir / "sweep.json", eval::reports_to_json(reports));
  const auto csv = eval::sweep_csv(reports);
  write_text(rc.output_dir / "sweep.csv", csv);
  stage.entry.artifacts["sweep"] = "sweep.json";
  stage.entry.artifacts["sweep_csv"] = "sweep.csv";
  if (plot) {
    write_png(rc.output_dir / "sweep.png", plot_sweep(reports));
    stage.entry.artifacts["sweep_plot"] = "sweep.png";
  }
  out << csv;
  stage.finish("ok");
  return kExitOk;
}

int cmd_report(const std::vector<fs::path>& inputs, const fs::path& out_file, std::ostream& out) {
  if (inputs.empty()) throw ConfigError("report needs at least one run directory or report file");
  std::vector<eval::EvalReport> all;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      // sweep.json already starts with the digital row
      const auto file = fs::exists(in / "sweep.json") ? in / "sweep.json" : in / "report.json";
      if (!fs::exists(file))
        throw MissingArtifactError("no report.json or sweep.json in " + in.string() + "; run `vssc eval` first");
      auto rs = eval::read_reports(file);
      all.insert(all.end(), rs.begin(), rs.end());
    } else if (fs::exists(in)) {
      auto rs = eval::read_reports(in);
      all.insert(all.end(), rs.begin(), rs.end());
    } else {
      throw MissingArtifactError("report input not found: " + in.string());
    }
  }
  const auto table = eval::comparison_table(all);
  if (!out_file.empty()) write_text(out_file, table);
  out << table;
  return kExitOk;
}

// ---- command line -----------------------------------------------------------

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic-trigger backdoor poisoning toolkit", "vssc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path;
  Overrides ov;
  std::uint64_t seed = 0;
  double pratio = 0.0;
  std::string trigger, backend;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "root seed override");
    sub->add_option("--pratio", pratio, "poisoning ratio override");
    sub->add_option("--trigger", trigger, "trigger override: badnets|blended|sig|wanet|bpp|trojannn|<phrase>");
    sub->add_option("--backend", backend, "edit backend override: local|echo|http");
  };

  auto* select = app.add_subcommand("select-trigger", "coarse + fine trigger selection");
  add_common(select);
  auto* poison = app.add_subcommand("poison", "build the poisoned training set and manifest");
  add_common(poison);
  bool replay = false;
  poison->add_flag("--replay", replay, "regenerate poisoned images from the manifest and compare");
  auto* train = app.add_subcommand("train", "train the desk classifier");
  add_common(train);
  bool clean = false;
  train->add_flag("--clean", clean, "train on the clean training set (control model)");
  auto* evalc = app.add_subcommand("eval", "digital evaluation (C-Acc, ASR, R-Acc)");
  add_common(evalc);
  auto* sweep = app.add_subcommand("sweep", "distortion sweep");
  add_common(sweep);
  bool plot = false;
  sweep->add_flag("--plot", plot, "also write sweep.png");

  auto* report = app.add_subcommand("report", "merge reports of several runs");
  std::vector<std::string> report_inputs;
  std::string report_out;
  report->add_option("inputs", report_inputs, "run directories or report files")->required();
  report->add_option("-o,--out", report_out, "write the table to this file too");

  auto* plotc = app.add_subcommand("plot", "render a sweep report as PNG");
  std::string plot_in, plot_out;
  plotc->add_option("input", plot_in, "sweep.json")->required()->check(CLI::ExistingFile);
  plotc->add_option("-o,--out", plot_out, "output PNG")->required();

  auto* synth = app.add_subcommand("synth", "write the procedural desk dataset");
  std::string synth_out;
  eval::SynthConfig synth_cfg;
  synth->add_option("-o,--out", synth_out, "output directory (train/ and test/)")->required();
  synth->add_option("--seed", synth_cfg.seed, "dataset seed");
  synth->add_option("--classes", synth_cfg.num_classes, "number of classes (2..10)");
  synth->add_option("--train-per-class", synth_cfg.train_per_class);
  synth->add_option("--test-per-class", synth_cfg.test_per_class);
  synth->add_option("--size", synth_cfg.size, "image side");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  auto sub = app.get_subcommands().front();
  auto overrides = [&] {
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--pratio")) ov.pratio = pratio;
    if (sub->count("--trigger")) ov.trigger = trigger;
    if (sub->count("--backend")) ov.backend = backend;
    return ov;
  };

  try {
    if (sub == report) {
      std::vector<fs::path> inputs(report_inputs.begin(), report_inputs.end());
      return cmd_report(inputs, report_out, out);
    }
    if (sub == plotc) {
      write_png(plot_out, plot_sweep(eval::read_reports(plot_in)));
      out << "wrote " << plot_out << "\n";
      return kExitOk;
    }
    if (sub == synth) {
      const auto ds = eval::make_shapes_dataset(synth_cfg);
      save_dataset(ds.train, fs::path(synth_out) / "train");
      save_dataset(ds.test, fs::path(synth_out) / "test");
      json names = ds.class_names;
      write_text(fs::path(synth_out) / "class_names.json", names.dump(2) + "\n");
      out << "wrote " << ds.train.size() << " train and " << ds.test.size() << " test images to " << synth_out
          << "\n";
      return kExitOk;
    }
    const auto rc = load_config(config_path, overrides());
    if (rc.task != "classification")
      throw ConfigError("the CLI runs classification experiments only; task is '" + rc.task + "'");
    if (sub == select) return cmd_select_trigger(rc, out);
    if (sub == poison) return cmd_poison(rc, replay, out);
    if (sub == train) return cmd_train(rc, clean, out);
    if (sub == evalc) return cmd_eval(rc, out);
    if (sub == sweep) return cmd_sweep(rc, plot, out);
  } catch (const MissingArtifactError& e) {
    err << "error: " << e.what() << "\n";
    return kExitMissingArtifact;
  } catch (const BackendError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const TrainingError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitFailure;
}

}  // namespace vssc::cli
