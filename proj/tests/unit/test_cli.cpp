#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "../support/recorded_fixtures.hpp"
#include "vssc/cli/commands.hpp"
#include "vssc/cli/config.hpp"
#include "vssc/cli/ledger.hpp"
#include "vssc/core/dataset_io.hpp"
#include "vssc/core/hash.hpp"
#include "vssc/core/png_io.hpp"
#include "vssc/core/random.hpp"
#include "vssc/eval/report.hpp"

using namespace vssc;
using namespace vssc::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("vssc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const json& j, const std::string& name = "cfg.json") {
  const auto p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "vssc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  const auto bytes = read_file_bytes(p);
  return {bytes.begin(), bytes.end()};
}

json small_synth(int classes = 3, int per_class = 10) {
  return {{"num_classes", classes}, {"train_per_class", per_class}, {"test_per_class", 4}, {"size", 32}};
}

json base_config() {
  return {{"seed", 7},
          {"output_dir", "run"},
          {"dataset", {{"synthetic", small_synth()}}},
          {"attack", {{"target_label", 0}, {"poisoning_ratio", 0.1}}},
          {"train", {{"epochs", 1}, {"batch_size", 16}}}};
}

}  // namespace

TEST_CASE("config parsing is strict") {
  const auto dir = fresh_dir("strict");
  CHECK_NOTHROW(parse_config(base_config(), dir));
  auto unknown = base_config();
  unknown["poisonig_ratio"] = 0.1;
  CHECK_THROWS_AS(parse_config(unknown, dir), ConfigError);
  auto nested = base_config();
  nested["attack"]["ratio"] = 0.1;
  CHECK_THROWS_AS(parse_config(nested, dir), ConfigError);
  auto typed = base_config();
  typed["attack"]["poisoning_ratio"] = "ten percent";
  CHECK_THROWS_AS(parse_config(typed, dir), ConfigError);
  auto no_out = base_config();
  no_out.erase("output_dir");
  CHECK_THROWS_AS(parse_config(no_out, dir), ConfigError);
  auto missing = base_config();
  missing["dataset"] = {{"train", "nowhere/train"}};
  CHECK_THROWS_AS(parse_config(missing, dir), ConfigError);
  auto bad_sweep = base_config();
  bad_sweep["sweep"] = json::array({{{"kind", "jpeg"}, {"quality", 75}}});
  CHECK_THROWS_AS(parse_config(bad_sweep, dir), ConfigError);
  auto bad_trigger = base_config();
  bad_trigger["trigger"] = {{"type", "semantic"}};
  CHECK_THROWS_AS(parse_config(bad_trigger, dir), ConfigError);
  auto bad_task = base_config();
  bad_task["task"] = "segmentation";
  CHECK_THROWS_AS(parse_config(bad_task, dir), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "absent.json"), ConfigError);
  std::ofstream(dir / "broken.json") << "{\"seed\": ";
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
}

TEST_CASE("config defaults and derived seeds") {
  const auto dir = fresh_dir("defaults");
  auto j = base_config();
  j["sweep"] = json::array({{{"kind", "noise"}, {"sigma", 5}}, {{"kind", "noise"}, {"sigma", 5}, {"seed", 99}}});
  const auto rc = parse_config(j, dir);
  CHECK(rc.output_dir == dir / "run");
  CHECK(rc.attack.seed == derive_seed(7, "attack"));
  CHECK(rc.train.seed == derive_seed(7, "train"));
  CHECK(rc.selection.seed == derive_seed(7, "selection"));
  CHECK(rc.inference_seed == derive_seed(7, "inference"));
  CHECK(rc.dataset.synthetic->seed == derive_seed(7, "dataset"));
  CHECK(rc.sweep[0].seed == derive_seed(derive_seed(7, "sweep"), 0));
  CHECK(rc.sweep[1].seed == 99);
  CHECK(rc.attack.max_attempts == 3);
  CHECK(rc.selection.isr_threshold == doctest::Approx(0.5));
  CHECK(rc.backends.edit.type == "local");
  CHECK_FALSE(rc.trigger);

  auto explicit_seed = base_config();
  explicit_seed["attack"]["seed"] = 5;
  CHECK(parse_config(explicit_seed, dir).attack.seed == 5);
}

TEST_CASE("command line overrides") {
  auto j = base_config();
  Overrides o;
  o.seed = 11;
  o.pratio = 0.2;
  o.trigger = "badnets";
  o.backend = "echo";
  apply_overrides(j, o);
  const auto rc = parse_config(j, fresh_dir("overrides"));
  CHECK(rc.seed == 11);
  CHECK(rc.attack.seed == derive_seed(11, "attack"));
  CHECK(rc.attack.poisoning_ratio == doctest::Approx(0.2));
  REQUIRE(rc.trigger);
  CHECK_FALSE(rc.trigger->is_semantic());
  CHECK(rc.backends.edit.type == "echo");

  CHECK(trigger_json_from_arg("semantic:red pepper") == json{{"type", "semantic"}, {"text", "red pepper"}});
  CHECK(trigger_json_from_arg("lemon slice") == json{{"type", "semantic"}, {"text", "lemon slice"}});
  CHECK(trigger_json_from_arg("sig") == json{{"type", "sig"}});
}

TEST_CASE("config hash") {
  const auto dir = fresh_dir("hash");
  const auto j = base_config();
  const auto a = load_config(write_config(dir, j, "a.json"));
  std::ofstream(dir / "b.json") << j.dump();
  const auto b = load_config(dir / "b.json");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 64);

  auto moved = j;
  moved["output_dir"] = "elsewhere";
  CHECK(config_hash(parse_config(moved, dir)) == config_hash(a));
  auto changed = j;
  changed["attack"]["poisoning_ratio"] = 0.05;
  CHECK(config_hash(parse_config(changed, dir)) != config_hash(a));
  auto reseeded = j;
  reseeded["seed"] = 8;
  CHECK(config_hash(parse_config(reseeded, dir)) != config_hash(a));
}

TEST_CASE("trigger and distortion json round trips") {
  const auto dir = fresh_dir("json");
  for (const char* name : {"badnets", "blended", "sig", "wanet", "bpp", "trojannn"}) {
    CAPTURE(name);
    const auto t = parse_trigger(json{{"type", name}}, dir);
    CHECK(parse_trigger(trigger_to_json(t), dir).describe() == t.describe());
  }
  const auto sem = parse_trigger(json{{"type", "semantic"}, {"text", "nuts"}}, dir);
  CHECK(sem.is_semantic());
  CHECK(sem.text == "nuts");
  CHECK_THROWS_AS(parse_trigger(json{{"type", "badnets"}, {"size", 3}}, dir), ConfigError);
  CHECK_THROWS_AS(parse_trigger(json{{"type", "blended"}, {"key_sha256", "00"}}, dir), ConfigError);
  CHECK_THROWS_AS(parse_trigger(json{{"type", "blended"}, {"key_image", "missing.png"}}, dir), ConfigError);

  const json d2p{{"kind", "d2p_chain"}};
  const auto d = parse_distortion(d2p);
  CHECK(distortion_to_json(parse_distortion(distortion_to_json(d))) == distortion_to_json(d));
  CHECK(d.chain.size() > 1);
  const auto jpeg = parse_distortion(json{{"kind", "jpeg"}, {"quality", 20}});
  CHECK(jpeg.jpeg_quality == 20);
  CHECK(distortion_to_json(jpeg).at("quality") == 20);
  CHECK_THROWS_AS(parse_distortion(json{{"kind", "blur"}}), ConfigError);
  CHECK_THROWS_AS(parse_distortion(json{{"kind", "rain"}}), ConfigError);
}

TEST_CASE("ledger and run lock") {
  const auto dir = fresh_dir("ledger");
  Ledger ledger(dir);
  CHECK(ledger.entries().empty());
  CHECK_FALSE(ledger.artifact("model"));
  try {
    ledger.require("model", "train");
    FAIL("expected MissingArtifactError");
  } catch (const MissingArtifactError& e) {
    CHECK(std::string(e.what()).find("run `vssc train` first") != std::string::npos);
  }

  std::ofstream(dir / "m1.bin") << "x";
  std::ofstream(dir / "m2.bin") << "y";
  LedgerEntry e{"train", "ok", "h", utc_timestamp(), utc_timestamp(), {{"model", "m1.bin"}}, json::object()};
  ledger.append(e);
  e.artifacts["model"] = "m2.bin";
  e.status = "failed";
  ledger.append(e);
  CHECK(ledger.entries().size() == 2);
  CHECK(*ledger.artifact("model") == dir / "m1.bin");
  e.status = "ok";
  ledger.append(e);
  CHECK(*ledger.artifact("model") == dir / "m2.bin");
  fs::remove(dir / "m2.bin");
  CHECK_FALSE(ledger.artifact("model"));

  {
    RunLock lock(dir);
    CHECK_THROWS_AS(RunLock{dir}, LockError);
  }
  CHECK_NOTHROW(RunLock{dir});
}

TEST_CASE("cli usage errors") {
  CHECK(run({"train", "-c", "/nonexistent/cfg.json"}).code == kExitConfig);
  CHECK(run({}).code == kExitConfig);
  CHECK(run({"frobnicate"}).code == kExitConfig);
  CHECK(run({"--help"}).code == kExitOk);
  const auto v = run({"--version"});
  CHECK(v.code == kExitOk);
  CHECK(v.out == std::string(kVersion) + "\n");

  const auto dir = fresh_dir("usage");
  auto unknown = base_config();
  unknown["extra"] = 1;
  const auto r = run({"poison", "-c", write_config(dir, unknown).string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("extra") != std::string::npos);

  auto det = base_config();
  det["task"] = "detection";
  CHECK(run({"poison", "-c", write_config(dir, det, "det.json").string()}).code == kExitConfig);
}

TEST_CASE("eval before train names the missing step") {
  const auto dir = fresh_dir("missing");
  auto j = base_config();
  j["trigger"] = {{"type", "badnets"}};
  const auto r = run({"eval", "-c", write_config(dir, j).string()});
  CHECK(r.code == kExitMissingArtifact);
  CHECK(r.err.find("run `vssc train` first") != std::string::npos);
  const auto t = run({"train", "-c", write_config(dir, j).string()});
  CHECK(t.code == kExitMissingArtifact);
  CHECK(t.err.find("run `vssc poison` first") != std::string::npos);
  CHECK(run({"report", (dir / "run").string()}).code == kExitMissingArtifact);
}

TEST_CASE("select-trigger without class names") {
  const auto dir = fresh_dir("noclasses");
  const auto ds_dir = dir / "train";
  LabeledDataset ds;
  ds.num_classes = 2;
  ds.samples.push_back({"a", ImageBuffer(8, 8, 3, 10), 0});
  ds.samples.push_back({"b", ImageBuffer(8, 8, 3, 20), 1});
  save_dataset(ds, ds_dir);
  json j{{"output_dir", "run"}, {"dataset", {{"train", "train"}}}};
  const auto r = run({"select-trigger", "-c", write_config(dir, j).string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("class_names") != std::string::npos);
}

TEST_CASE("baseline poisoning through the cli") {
  const auto dir = fresh_dir("baseline");
  auto j = base_config();
  j["dataset"]["synthetic"] = small_synth(4, 25);
  j["attack"]["poisoning_ratio"] = 0.05;
  j["trigger"] = {{"type", "badnets"}};
  const auto cfg = write_config(dir, j).string();
  const auto r = run({"poison", "-c", cfg});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("actual_ratio 0.0500 (5/100") != std::string::npos);
  const auto poisoned = load_dataset(dir / "run" / "poisoned");
  CHECK(poisoned.size() == 100);
  const auto ledger = Ledger(dir / "run").entries();
  REQUIRE(ledger.size() == 1);
  CHECK(ledger[0].at("status") == "ok");
  CHECK(ledger[0].at("details").at("poisoned") == 5);
  CHECK(ledger[0].at("config_hash") == config_hash(load_config(cfg)));

  const auto rep = run({"poison", "-c", cfg, "--replay"});
  CHECK(rep.code == kExitOk);
  CHECK(rep.out.find("0 mismatched") != std::string::npos);

  CHECK(run({"poison", "-c", cfg, "--pratio", "0.1"}).code == kExitOk);
  CHECK(load_dataset(dir / "run" / "poisoned").size() == 100);
  CHECK(Ledger(dir / "run").entries().back().at("details").at("poisoned") == 10);
}

TEST_CASE("semantic poisoning that never passes the check") {
  const auto dir = fresh_dir("zero");
  auto j = base_config();
  j["trigger"] = {{"type", "semantic"}, {"text", "nuts"}};
  j["backends"] = {{"edit", {{"type", "echo"}}}, {"qa", {{"type", "constant"}, {"answer", false}}}};
  const auto r = run({"poison", "-c", write_config(dir, j).string()});
  CHECK(r.code == kExitZeroPoisoned);
  CHECK(r.out.find("actual_ratio 0.0000") != std::string::npos);
  CHECK(Ledger(dir / "run").entries().back().at("status") == "warning");
}

TEST_CASE("unreachable edit backend") {
  const auto dir = fresh_dir("unreachable");
  auto j = base_config();
  j["dataset"]["synthetic"] = small_synth(2, 5);
  j["trigger"] = {{"type", "semantic"}, {"text", "nuts"}};
  j["backends"] = {{"edit",
                    {{"type", "http"},
                     {"url", "http://127.0.0.1:9"},
                     {"timeout_ms", 300},
                     {"max_retries", 0},
                     {"backoff_ms", 1}}}};
  const auto r = run({"poison", "-c", write_config(dir, j).string()});
  CHECK(r.code == kExitBackend);
  CHECK(r.out.find("every backend call failed") != std::string::npos);

  auto chat = base_config();
  chat["backends"] = {{"chat", {{"type", "http"}, {"url", "http://127.0.0.1:9"}, {"timeout_ms", 300},
                                {"max_retries", 0}, {"backoff_ms", 1}}}};
  CHECK(run({"select-trigger", "-c", write_config(dir, chat, "chat.json").string()}).code == kExitBackend);
}

TEST_CASE("select-trigger over the recorded food classes") {
  const auto dir = fresh_dir("select");
  LabeledDataset ds;
  ds.num_classes = 11;
  Rng rng(3);
  for (int c = 0; c < 11; ++c)
    for (int k = 0; k < 15; ++k) {
      ImageBuffer img(16, 16, 3);
      for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.below(256));
      ds.samples.push_back({"f" + std::to_string(c) + "_" + std::to_string(k), std::move(img), c});
    }
  save_dataset(ds, dir / "food");
  json isr = json::object();
  for (const auto& [text, value] : testing::kFineIsr) isr[text] = value;
  json j{{"seed", 1},
         {"output_dir", "run"},
         {"dataset", {{"train", "food"}}},
         {"class_names", testing::kFood11Classes},
         {"selection", {{"eval_images_per_class", 15}}},
         {"backends",
          {{"chat", {{"type", "fixture"}, {"reply", testing::kCoarseAnswer}}},
           {"edit", {{"type", "echo"}}},
           {"qa", {{"type", "isr_fixture"}, {"isr", isr}}}}}};
  const auto cfg = write_config(dir, j).string();
  const auto r = run({"select-trigger", "-c", cfg});
  REQUIRE(r.code == kExitOk);
  const auto sel = json::parse(slurp(dir / "run" / "selection.json"));
  CHECK(sel.at("qualified") == json{"strawberry", "nuts", "herbs", "blueberry"});
  CHECK(sel.at("candidates").size() == 14);
  CHECK(sel.at("raw_reply") == testing::kCoarseAnswer);
  const auto first = sha256_hex(slurp(dir / "run" / "selection.json"));
  REQUIRE(run({"select-trigger", "-c", cfg}).code == kExitOk);
  CHECK(sha256_hex(slurp(dir / "run" / "selection.json")) == first);

  auto strict = j;
  strict["selection"]["isr_threshold"] = 0.9;
  const auto none = run({"select-trigger", "-c", write_config(dir, strict, "strict.json").string()});
  CHECK(none.code == kExitFailure);
}

TEST_CASE("full flow and report merging") {
  const auto dir = fresh_dir("flow");
  auto j = base_config();
  j["dataset"]["synthetic"] = small_synth(3, 20);
  j["trigger"] = {{"type", "badnets"}};
  j["sweep"] = json::array({{{"kind", "blur"}, {"kernel", 3}}, {{"kind", "jpeg"}, {"quality", 20}}});
  const auto a_cfg = write_config(dir, j, "a.json").string();
  auto k = j;
  k["output_dir"] = "run_sig";
  k["trigger"] = {{"type", "sig"}};
  const auto b_cfg = write_config(dir, k, "b.json").string();

  for (const auto& cfg : {a_cfg, b_cfg}) {
    REQUIRE(run({"poison", "-c", cfg}).code == kExitOk);
    REQUIRE(run({"train", "-c", cfg}).code == kExitOk);
    REQUIRE(run({"eval", "-c", cfg}).code == kExitOk);
  }
  const auto report_a = slurp(dir / "run" / "report.json");
  REQUIRE(run({"eval", "-c", a_cfg}).code == kExitOk);
  CHECK(slurp(dir / "run" / "report.json") == report_a);

  REQUIRE(run({"sweep", "-c", a_cfg, "--plot"}).code == kExitOk);
  CHECK(fs::exists(dir / "run" / "sweep.png"));
  const auto sweep = eval::read_reports(dir / "run" / "sweep.json");
  REQUIRE(sweep.size() == 3);
  CHECK(slurp(dir / "run" / "sweep.csv").rfind("scenario,param,c_acc,asr,r_acc\ndigital,0,", 0) == 0);

  const auto merged = run({"report", (dir / "run_sig").string(), (dir / "run").string(), "-o",
                           (dir / "table.csv").string()});
  REQUIRE(merged.code == kExitOk);
  CHECK(merged.out == slurp(dir / "table.csv"));
  CHECK(merged.out.find("badnets") < merged.out.find("sig"));
  CHECK(std::count(merged.out.begin(), merged.out.end(), '\n') == 5);

  REQUIRE(run({"plot", (dir / "run" / "sweep.json").string(), "-o", (dir / "p.png").string()}).code == kExitOk);
  CHECK(read_png(dir / "p.png").width() > 0);

  REQUIRE(run({"train", "-c", a_cfg, "--clean"}).code == kExitOk);
  const auto log = json::parse(slurp(dir / "run" / "train_log.json"));
  CHECK(log.at("clean") == true);
}

TEST_CASE("synth command") {
  const auto dir = fresh_dir("synth");
  const auto r = run({"synth", "-o", dir.string(), "--classes", "3", "--train-per-class", "4", "--test-per-class",
                      "2", "--seed", "5"});
  REQUIRE(r.code == kExitOk);
  CHECK(load_dataset(dir / "train").size() == 12);
  CHECK(load_dataset(dir / "test").size() == 6);
  CHECK(json::parse(slurp(dir / "class_names.json")).size() == 3);
  CHECK(run({"synth", "-o", dir.string(), "--classes", "12"}).code == kExitConfig);
}
