#include <doctest.h>

#include <set>

#include "../support/recorded_fixtures.hpp"
#include "../support/stage_one_oracle.hpp"
#include "../support/stubs.hpp"
#include "vssc/core/errors.hpp"
#include "vssc/core/manifest_io.hpp"
#include "vssc/core/random.hpp"
#include "vssc/pipeline/generation.hpp"
#include "vssc/pipeline/insertion.hpp"
#include "vssc/pipeline/selection.hpp"
#include "vssc/services/local.hpp"

using namespace vssc;
using namespace vssc::pipeline;
using namespace vssc::testing;

namespace {

std::shared_ptr<const services::SpriteLibrary> builtin_sprites() {
  static auto lib = std::make_shared<const services::SpriteLibrary>(services::SpriteLibrary::builtin());
  return lib;
}

LabeledDataset textured_dataset(std::size_t n, int classes, int size = 32) {
  LabeledDataset ds;
  ds.num_classes = classes;
  for (std::size_t i = 0; i < n; ++i) {
    ImageBuffer img(size, size, 3);
    Rng rng(derive_seed(99, i));
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(60 + rng.below(120));
    ds.samples.push_back({"t" + std::to_string(i), std::move(img), static_cast<int>(i % classes)});
  }
  return ds;
}

std::set<std::string> qualified(const std::vector<TriggerCandidate>& ranked) {
  std::set<std::string> out;
  for (const auto& c : ranked)
    if (c.status == CandidateStatus::kQualified) out.insert(c.text);
  return out;
}

}  // namespace

TEST_CASE("prompt templates") {
  CHECK(render_trigger_template("Add a ${trigger} here, [trigger]!", "mint") == "Add a mint here, mint!");
  CHECK(criterion_question("mint exists in the image") ==
        "Is it true that mint exists in the image? Answer yes or no.");
  QualityCriteria c;
  CHECK_NOTHROW(c.validate());
  c.templates = {"no placeholder"};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.templates = {};
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("candidate list parsing") {
  CHECK(parse_candidate_list("").empty());
  CHECK(parse_candidate_list("A, a, A.") == std::vector<std::string>{"a"});
  CHECK(parse_candidate_list("1. Red Flower\n2) nuts;\n- Ice-cubes\n* mint") ==
        std::vector<std::string>{"red flower", "nuts", "ice cubes", "mint"});
  CHECK(parse_candidate_list("  chef's hat  ,  ") == std::vector<std::string>{"chef's hat"});
}

TEST_CASE("coarse selection") {
  SelectionConfig cfg;
  SUBCASE("recorded answer on the food classes") {
    services::FixtureChatClient chat(kCoarseAnswer);
    const auto sel = coarse_select(kFood11Classes, cfg, chat);
    CHECK(sel.error.empty());
    CHECK(sel.prompt.find("bread, dairy, dessert, egg, fried-food, meat, noodles, rice, seafood, soup, vegetable") !=
          std::string::npos);
    std::set<std::string> names;
    for (const auto& c : sel.candidates) {
      names.insert(c.text);
      CHECK(c.status == CandidateStatus::kCandidate);
      CHECK_FALSE(c.isr);
    }
    CHECK(sel.candidates.size() == 14);
    for (const char* t : {"strawberry", "nuts", "herbs", "blueberry", "ice cubes"}) CHECK(names.count(t) == 1);
  }
  SUBCASE("empty reply") {
    services::FixtureChatClient chat("");
    const auto sel = coarse_select(kFood11Classes, cfg, chat);
    CHECK(sel.candidates.empty());
    CHECK(sel.error.empty());
  }
  SUBCASE("chat failure is reported") {
    FailingChat chat;
    const auto sel = coarse_select(kFood11Classes, cfg, chat);
    CHECK(sel.candidates.empty());
    CHECK_FALSE(sel.error.empty());
  }
  SUBCASE("no classes") {
    services::FixtureChatClient chat("x");
    CHECK_THROWS_AS(coarse_select({}, cfg, chat), ConfigError);
  }
}

TEST_CASE("fine selection") {
  const auto ds = indexed_dataset(11 * 20, 11);
  SelectionConfig cfg;
  cfg.seed = 3;
  services::FixtureChatClient chat(kCoarseAnswer);
  const auto coarse = coarse_select(kFood11Classes, cfg, chat);
  services::EchoEditBackend echo;
  QualityCriteria criteria;

  SUBCASE("evaluation set has 15 images per class") {
    const auto idx = build_evaluation_set(ds, cfg);
    CHECK(idx.size() == 165);
    std::map<int, int> per;
    for (auto i : idx) ++per[ds.samples[i].label];
    for (const auto& [c, n] : per) CHECK(n == 15);
    CHECK(idx == build_evaluation_set(ds, cfg));
    CHECK_THROWS_AS(build_evaluation_set(indexed_dataset(20, 11), cfg), ConfigError);
  }
  SUBCASE("recorded ISR table") {
    services::IsrFixtureVqa qa(kFineIsr);
    const auto ranked = fine_select(coarse.candidates, ds, cfg, criteria, echo, qa);
    CHECK(qualified(ranked) == std::set<std::string>{"strawberry", "nuts", "herbs", "blueberry"});
    for (const auto& c : ranked) {
      REQUIRE(c.isr);
      CHECK(*c.isr == doctest::Approx(kFineIsr.at(c.text)).epsilon(0.01));
      CHECK(c.evaluated == 165);
    }
    REQUIRE(ranked.size() == coarse.candidates.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) CHECK(ranked[i].text == coarse.candidates[i].text);
  }
  SUBCASE("always yes") {
    services::ConstantVqa qa(true);
    const auto ranked = fine_select(coarse.candidates, ds, cfg, criteria, echo, qa);
    CHECK(qualified(ranked).size() == 14);
    for (const auto& c : ranked) CHECK(*c.isr == 1.0);
  }
  SUBCASE("always no") {
    services::ConstantVqa qa(false);
    const auto ranked = fine_select(coarse.candidates, ds, cfg, criteria, echo, qa);
    CHECK(qualified(ranked).empty());
    for (const auto& c : ranked) CHECK(*c.isr == 0.0);
  }
}

TEST_CASE("trigger insertion") {
  const auto img = textured_dataset(1, 1, 48).samples[0].image;
  services::LocalCompositor comp(builtin_sprites());
  const auto trig = TriggerSpec::semantic("red flower");

  SUBCASE("local backend is reproducible") {
    const auto a = insert_trigger(img, trig, 0, 7, comp);
    const auto b = insert_trigger(img, trig, 0, 7, comp);
    REQUIRE(a.ok());
    CHECK(*a.result == *b.result);
    CHECK(a.backend_args == b.backend_args);
    CHECK(services::find_arg(a.backend_args, "attempt") == std::optional<std::string>("0"));
  }
  SUBCASE("another attempt seed moves the sprite") {
    const auto a = insert_trigger(img, trig, 0, 7, comp);
    const auto b = insert_trigger(img, trig, 1, 8, comp);
    const auto& ma = *a.metadata;
    const auto& mb = *b.metadata;
    CHECK(std::tie(ma.x, ma.y, ma.side, ma.rotation_deg) != std::tie(mb.x, mb.y, mb.side, mb.rotation_deg));
  }
  SUBCASE("echo backend fails the existence check") {
    services::EchoEditBackend echo;
    const auto a = insert_trigger(img, trig, 0, 1, echo);
    REQUIRE(a.ok());
    CHECK(*a.result == img);
    services::RuleVqa qa;
    const auto v = assess_quality(*a.result, a.metadata, trig, QualityCriteria{}, qa);
    CHECK_FALSE(v.pass);
    CHECK_FALSE(v.answers[0].yes);
  }
  SUBCASE("unknown phrase is a failed attempt") {
    const auto a = insert_trigger(img, TriggerSpec::semantic("unicorn"), 0, 1, comp);
    CHECK_FALSE(a.ok());
    CHECK_FALSE(a.error.empty());
  }
}

TEST_CASE("quality assessment is a conjunction") {
  const ImageBuffer img(8, 8, 3, 0);
  const auto trig = TriggerSpec::semantic("mint");
  QualityCriteria criteria;
  {
    ScriptedVqa qa({{"exists", "Yes."}, {"compatible", "yes"}});
    const auto v = assess_quality(img, std::nullopt, trig, criteria, qa);
    CHECK(v.pass);
    REQUIRE(v.answers.size() == 2);
    CHECK(v.answers[0].criterion == "mint exists in the image");
  }
  {
    ScriptedVqa qa({{"exists", "yes"}, {"compatible", "no"}});
    CHECK_FALSE(assess_quality(img, std::nullopt, trig, criteria, qa).pass);
  }
  {
    ScriptedVqa qa({{"exists", "maybe"}, {"compatible", "yes"}});
    const auto v = assess_quality(img, std::nullopt, trig, criteria, qa);
    CHECK_FALSE(v.pass);
    CHECK(v.answers[0].raw == "maybe");
  }
}

TEST_CASE("stage one generation") {
  auto ds = indexed_dataset(100, 10);
  AttackConfig cfg;
  cfg.target_label = 0;
  cfg.poisoning_ratio = 0.05;
  cfg.seed = 17;
  const auto trig = TriggerSpec::semantic("mint");
  QualityCriteria criteria;

  SUBCASE("always pass stops at the target") {
    MarkingEditor edit;
    services::ConstantVqa qa(true);
    const auto r = generate_poisoned_dataset(ds, trig, cfg, criteria, edit, qa);
    CHECK(r.manifest.poisoned_count() == 5);
    CHECK(r.manifest.actual_ratio == doctest::Approx(0.05));
    CHECK(edit.total() == 5);
    CHECK_FALSE(r.warning);
    for (const auto& rec : r.manifest.records) {
      CHECK(r.dataset.samples[rec.sample_index].label == 0);
      CHECK(rec.attempts_used == 1);
    }
  }
  SUBCASE("always fail poisons nothing") {
    MarkingEditor edit;
    services::ConstantVqa qa(false);
    const auto r = generate_poisoned_dataset(ds, trig, cfg, criteria, edit, qa);
    CHECK(r.manifest.poisoned_count() == 0);
    CHECK(r.manifest.actual_ratio == 0.0);
    CHECK(r.warning);
    CHECK(r.manifest.records.size() == 7);
    CHECK(edit.max_calls() == 3);
    CHECK(edit.total() == 21);
  }
  SUBCASE("schedules match the step-through oracle") {
    cfg.poisoning_ratio = 0.10;
    const std::vector<std::pair<const char*, std::function<bool(int, int)>>> rules{
        {"second attempt only", [](int, int a) { return a % 2 == 1; }},
        {"even attempt numbers, some samples never", [](int s, int a) { return (a + 1) % 2 == 0 && s % 3 != 0; }},
        {"third attempt on odd samples", [](int s, int a) { return a == 2 && s % 2 == 1; }},
    };
    for (const auto& [name, rule] : rules) {
      CAPTURE(name);
      MarkingEditor edit;
      RuleStubVqa qa(rule);
      const auto r = generate_poisoned_dataset(ds, trig, cfg, criteria, edit, qa);
      const auto expect = simulate_stage_one(ds, cfg, rule);
      CHECK(r.manifest.poisoned_count() == expect);
      CHECK(r.manifest.poisoned_count() <= 10);
      CHECK(edit.max_calls() <= cfg.max_attempts);
      for (const auto& rec : r.manifest.records) CHECK(rec.attempts_used <= cfg.max_attempts);
    }
  }
  SUBCASE("parallelism does not change the manifest") {
    cfg.poisoning_ratio = 0.10;
    auto rule = [](int s, int a) { return (s + a) % 3 == 0; };
    MarkingEditor e1, e4;
    RuleStubVqa q1(rule), q4(rule);
    GenerationOptions serial, parallel;
    parallel.parallelism = 4;
    const auto a = generate_poisoned_dataset(ds, trig, cfg, criteria, e1, q1, serial);
    const auto b = generate_poisoned_dataset(ds, trig, cfg, criteria, e4, q4, parallel);
    CHECK(manifest_to_jsonl(a.manifest) == manifest_to_jsonl(b.manifest));
    CHECK(dataset_fingerprint(a.dataset) == dataset_fingerprint(b.dataset));
  }
  SUBCASE("seeds are recorded per attempt") {
    MarkingEditor edit;
    RuleStubVqa qa([](int, int a) { return a == 1; });
    const auto r = generate_poisoned_dataset(ds, trig, cfg, criteria, edit, qa);
    for (const auto& rec : r.manifest.records) {
      CHECK(rec.seed == record_seed(cfg.seed, rec.sample_index));
      for (const auto& att : rec.attempts) CHECK(att.seed == attempt_seed(rec.seed, att.attempt_index));
    }
  }
  SUBCASE("baseline triggers skip the loop") {
    auto img_ds = textured_dataset(200, 10);
    const auto r = poison_with_baseline(img_ds, TriggerSpec::from_baseline(triggers::BadNetsParams{}), cfg);
    CHECK(r.manifest.poisoned_count() == 10);
    CHECK_THROWS_AS(generate_poisoned_dataset(img_ds, TriggerSpec::from_baseline(triggers::SigParams{}), cfg,
                                              criteria, *std::make_unique<services::EchoEditBackend>(),
                                              *std::make_unique<services::ConstantVqa>(true)),
                    ConfigError);
  }
}

TEST_CASE("stage three inference poisoning") {
  const auto img = indexed_dataset(1, 1).samples[0].image;
  const auto trig = TriggerSpec::semantic("mint");
  QualityCriteria criteria;
  {
    MarkingEditor edit;
    services::ConstantVqa qa(true);
    const auto r = poison_inference_image(img, trig, criteria, edit, qa, 3, 5);
    CHECK(r.backend_calls == 1);
    REQUIRE(r.image);
  }
  {
    MarkingEditor edit;
    services::ConstantVqa qa(false);
    const auto r = poison_inference_image(img, trig, criteria, edit, qa, 3, 5);
    CHECK(r.backend_calls == 3);
    CHECK(edit.total() == 3);
    CHECK_FALSE(r.image);
  }
  {
    MarkingEditor edit;
    RuleStubVqa qa([](int, int a) { return a == 1; });
    const auto r = poison_inference_image(img, trig, criteria, edit, qa, 3, 5);
    REQUIRE(r.image);
    MarkingEditor again;
    const auto second = insert_trigger(img, trig, 1, attempt_seed(5, 1), again);
    CHECK(*r.image == *second.result);
  }
  {
    MarkingEditor edit;
    services::ConstantVqa qa(false);
    GenerationOptions no_qa;
    no_qa.qa_enabled = false;
    const auto r = poison_inference_image(img, trig, criteria, edit, qa, 3, 5, no_qa);
    CHECK(r.image);
    CHECK(r.backend_calls == 1);
  }
}

TEST_CASE("manifest replay") {
  const auto ds = textured_dataset(200, 10);
  AttackConfig cfg;
  cfg.poisoning_ratio = 0.1;
  cfg.seed = 23;
  services::LocalCompositor comp(builtin_sprites());
  services::RuleVqa qa;
  const auto trig = TriggerSpec::semantic("strawberry");
  const auto r = generate_poisoned_dataset(ds, trig, cfg, QualityCriteria{}, comp, qa);
  REQUIRE(r.manifest.poisoned_count() > 0);

  const auto rep = replay_manifest(ds, r.dataset, r.manifest, trig, &comp);
  CHECK(rep.identical());
  CHECK(rep.checked == r.manifest.poisoned_count());

  auto tampered = r.dataset;
  const auto& victim = r.manifest.records.front();
  REQUIRE(victim.final_status == PoisonStatus::kPoisoned);
  tampered.samples[victim.sample_index].image.at(5, 5, 1) ^= 0x40;
  const auto bad = replay_manifest(ds, tampered, r.manifest, trig, &comp);
  CHECK(bad.mismatched == std::vector<std::string>{victim.sample_id});

  const auto base = poison_with_baseline(ds, TriggerSpec::from_baseline(triggers::SigParams{}), cfg);
  CHECK(replay_manifest(ds, base.dataset, base.manifest, TriggerSpec::from_baseline(triggers::SigParams{}), nullptr)
            .identical());
}
