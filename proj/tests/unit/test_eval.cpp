#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <set>

#include "vssc/core/errors.hpp"
#include "vssc/core/png_io.hpp"
#include "vssc/core/random.hpp"
#include "vssc/eval/classification.hpp"
#include "vssc/eval/detection.hpp"
#include "vssc/eval/nder.hpp"
#include "vssc/eval/network.hpp"
#include "vssc/eval/report.hpp"
#include "vssc/eval/scenario.hpp"
#include "vssc/eval/synth.hpp"
#include "vssc/eval/train.hpp"
#include "vssc/eval/verification.hpp"
#include "vssc/triggers/baseline.hpp"
#include "../support/detection_oracle.hpp"

using namespace vssc;
using namespace vssc::eval;
using namespace vssc::testing;
namespace fs = std::filesystem;

namespace {

// Predicts the class whose index matches the mean intensity bucket.
class MeanClassifier : public Classifier {
 public:
  explicit MeanClassifier(int classes) : classes_(classes) {}
  Mat logits(std::span<const ImageBuffer* const> images) const override {
    Mat out = Mat::Zero(classes_, static_cast<Eigen::Index>(images.size()));
    for (std::size_t i = 0; i < images.size(); ++i) {
      double m = 0;
      for (auto v : images[i]->data()) m += v;
      m /= static_cast<double>(images[i]->size());
      const int c = std::min(classes_ - 1, static_cast<int>(m * classes_ / 256.0));
      out(c, static_cast<Eigen::Index>(i)) = 1.0F;
    }
    return out;
  }
  int num_classes() const override { return classes_; }

 private:
  int classes_;
};

LabeledDataset bucket_dataset(int classes, int per_class, int size = 16) {
  LabeledDataset ds;
  ds.num_classes = classes;
  Rng rng(8);
  for (int c = 0; c < classes; ++c)
    for (int k = 0; k < per_class; ++k) {
      ImageBuffer img(size, size, 3);
      const int base = (256 / classes) * c + 256 / classes / 2;
      for (auto& v : img.data()) v = quantize(base + rng.uniform(-6, 6));
      ds.samples.push_back({"b" + std::to_string(c) + "_" + std::to_string(k), std::move(img), c});
    }
  return ds;
}

}  // namespace

TEST_CASE("iou") {
  CHECK(iou(gt(0, 0, 10, 10, 0), gt(0, 0, 10, 10, 1)) == 1.0);
  CHECK(iou(gt(0, 0, 10, 10, 0), gt(5, 0, 10, 10, 0)) == doctest::Approx(50.0 / 150.0));
  CHECK(iou(gt(0, 0, 10, 10, 0), gt(20, 20, 1, 1, 0)) == 0.0);
  CHECK(iou(gt(0, 0, 0, 0, 0), gt(0, 0, 0, 0, 0)) == 0.0);
}

TEST_CASE("detection metrics on the micro fixture") {
  MicroFixture f;
  for (int cls : {0, 1}) {
    CAPTURE(cls);
    CHECK(std::abs(*average_precision(f.preds, f.gts, cls) - brute_ap(f.preds, f.gts, cls)) <= 1e-9);
    CHECK(std::abs(*average_precision(f.preds, f.gts, cls, 0.5, ApInterpolation::kElevenPoint) -
                   brute_ap11(f.preds, f.gts, cls)) <= 1e-9);
  }
  const double map = 0.5 * (brute_ap(f.preds, f.gts, 0) + brute_ap(f.preds, f.gts, 1));
  CHECK(std::abs(mean_average_precision(f.preds, f.gts, 2) - map) <= 1e-9);
  CHECK_FALSE(average_precision(f.preds, f.gts, 7));

  // A: p .9, B: p .8, C: p .7; D only by a .4 box; E only by a .2 box.
  CHECK(*oda_asr(f.preds, f.gts) == doctest::Approx(2.0 / 5.0));
  CHECK(*oda_asr(f.preds, f.gts) + *oda_detected_fraction(f.preds, f.gts) == doctest::Approx(1.0));
  CHECK(*gma_asr(f.preds, f.gts, 0) == doctest::Approx(brute_gma_hits(f.preds, f.gts, 0) / 2.0));
  CHECK(*gma_asr(f.preds, f.gts, 0) == doctest::Approx(0.5));
}

TEST_CASE("detection metric edge cases") {
  MicroFixture f;
  const ImageBoxes none(3);
  CHECK(*oda_asr(none, f.gts) == 1.0);
  CHECK(mean_average_precision(none, f.gts, 2) == 0.0);

  ImageBoxes as_preds = f.gts;
  for (auto& img : as_preds)
    for (auto& b : img) b.confidence = 0.9;
  ImageBoxes no_target = f.gts;
  for (auto& img : no_target)
    for (auto& b : img) b.c = 1;
  ImageBoxes perfect = no_target;
  for (auto& img : perfect)
    for (auto& b : img) b.confidence = 0.9;
  CHECK(*gma_asr(perfect, no_target, 0) == 0.0);
  CHECK(mean_average_precision(as_preds, f.gts, 2) == doctest::Approx(1.0));

  ImageBoxes unscored = f.gts;
  CHECK_THROWS_AS(average_precision(unscored, f.gts, 0), ConfigError);
  CHECK_THROWS_AS(oda_asr(ImageBoxes(2), f.gts), DimensionError);
}

TEST_CASE("detection report") {
  MicroFixture f;
  const auto oda = eval_detection(f.preds, f.gts, f.preds, f.gts, labels::DetectionPoisonMode::oda(), 2);
  CHECK(oda.task == Task::kDetectionOda);
  CHECK(oda.c_acc == doctest::Approx(mean_average_precision(f.preds, f.gts, 2)));
  CHECK(*oda.asr == doctest::Approx(0.4));
  const auto gma = eval_detection(f.preds, f.gts, f.preds, f.gts, labels::DetectionPoisonMode::gma(0), 2);
  CHECK(gma.task == Task::kDetectionGma);
  CHECK(*gma.asr == doctest::Approx(0.5));
}

TEST_CASE("classification report") {
  const std::vector<int> labels{1, 2, 3, 1};
  SUBCASE("always target") {
    const std::vector<int> p(4, 0);
    const auto r = classification_report(labels, labels, labels, p, 0);
    CHECK(*r.asr == 1.0);
    CHECK(*r.r_acc == 0.0);
    CHECK(r.c_acc == 1.0);
  }
  SUBCASE("perfect original labels") {
    const auto r = classification_report(labels, labels, labels, labels, 0);
    CHECK(*r.asr == 0.0);
    CHECK(*r.r_acc == 1.0);
  }
  SUBCASE("hand counted fixture") {
    // 10 clean: 7 right. 10 poisoned: 6 to target 0, 3 keep label, 1 elsewhere.
    const std::vector<int> cl{0, 1, 2, 3, 4, 0, 1, 2, 3, 4};
    const std::vector<int> cp{0, 1, 2, 3, 4, 0, 1, 0, 0, 0};
    const std::vector<int> pl{1, 2, 3, 4, 1, 2, 3, 4, 1, 2};
    const std::vector<int> pp{0, 0, 0, 0, 0, 0, 3, 4, 1, 3};
    const auto r = classification_report(cl, cp, pl, pp, 0, 4);
    CHECK(r.c_acc == doctest::Approx(0.7));
    CHECK(*r.asr == doctest::Approx(0.6));
    CHECK(*r.r_acc == doctest::Approx(0.3));
    CHECK(r.excluded_count == 4);
    CHECK(r.poisoned_count == 10);
  }
  SUBCASE("nothing poisoned leaves asr undefined") {
    const auto r = classification_report(labels, labels, {}, {}, 0);
    CHECK(r.asr_undefined());
  }
  SUBCASE("contract violations") {
    CHECK_THROWS_AS(classification_report(labels, labels, std::vector<int>{0}, std::vector<int>{0}, 0), ConfigError);
    CHECK_THROWS_AS(classification_report(labels, std::vector<int>{1}, {}, {}, 0), DimensionError);
  }
  SUBCASE("asr plus r-acc never exceeds one") {
    Rng rng(31);
    for (int trial = 0; trial < 500; ++trial) {
      const int classes = 2 + static_cast<int>(rng.below(9));
      const int target = static_cast<int>(rng.below(classes));
      const std::size_t n = 1 + rng.below(60);
      std::vector<int> pl, pp;
      for (std::size_t i = 0; i < n; ++i) {
        int l;
        do l = static_cast<int>(rng.below(classes));
        while (l == target);
        pl.push_back(l);
        pp.push_back(static_cast<int>(rng.below(classes)));
      }
      const auto r = classification_report({}, {}, pl, pp, target);
      REQUIRE(*r.asr + *r.r_acc <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("poisoned test set construction") {
  const auto ds = bucket_dataset(4, 5);
  const auto set = build_poisoned_test_set(ds, 2, [](const Sample& s, std::size_t i) -> std::optional<ImageBuffer> {
    if (i % 7 == 0) return std::nullopt;
    return s.image;
  });
  CHECK(set.excluded_target == 5);
  std::size_t failures = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) failures += ds.samples[i].label != 2 && i % 7 == 0;
  CHECK(set.failures == failures);
  CHECK(set.samples.size() == 15 - failures);
  for (std::size_t k = 0; k < set.samples.size(); ++k) {
    CHECK(set.samples[k].label != 2);
    CHECK(set.samples[k].label == ds.samples[set.source_indices[k]].label);
  }
  MeanClassifier model(4);
  const auto r = eval_classification(model, ds, set, 2);
  CHECK(r.excluded_count == 5 + failures);
  CHECK(r.poison_failures == failures);
  CHECK(r.c_acc == 1.0);
}

TEST_CASE("verification metrics") {
  SUBCASE("identical embeddings") {
    Embeddings e{{"a", Eigen::VectorXf::Ones(4)}, {"b", Eigen::VectorXf::Ones(4)}, {"c", Eigen::VectorXf::Ones(4)}};
    std::vector<labels::VerificationPair> pairs{{"a", "b", true, false}, {"a", "c", false, false},
                                                {"b", "c", false, false}};
    const auto r = eval_verification(pairs, e, 0.5);
    CHECK(r.c_acc == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("orthogonal identities") {
    Embeddings e;
    for (int id = 0; id < 3; ++id)
      for (int k = 0; k < 2; ++k) {
        Eigen::VectorXf v = Eigen::VectorXf::Zero(3);
        v(id) = 1.0F + 0.1F * k;
        e["i" + std::to_string(id) + std::to_string(k)] = v;
      }
    std::vector<labels::VerificationPair> pairs{
        {"i00", "i01", true, false}, {"i10", "i11", true, false}, {"i00", "i10", false, false},
        {"i11", "i20", false, false}};
    CHECK(eval_verification(pairs, e, 0.5).c_acc == 1.0);
  }
  SUBCASE("eight pair fixture") {
    Embeddings e{{"a", Eigen::Vector2f(1, 0)},  {"b", Eigen::Vector2f(1, 1)},  {"c", Eigen::Vector2f(0, 1)},
                 {"d", Eigen::Vector2f(-1, 0)}, {"e", Eigen::Vector2f(1, 0.2F)}};
    // cos: a-b .7071, a-c 0, a-d -1, a-e .9806, b-c .7071, b-d -.7071, c-e .1961, d-e -.9806
    std::vector<labels::VerificationPair> pairs{
        {"a", "b", true, false},  {"a", "c", false, false}, {"a", "d", false, false}, {"a", "e", true, false},
        {"b", "c", false, false}, {"b", "d", false, true},  {"c", "e", false, true},  {"d", "e", false, true}};
    const auto scores = score_pairs(pairs, e);
    CHECK(scores[0].similarity == doctest::Approx(std::sqrt(0.5)));
    CHECK(scores[7].similarity == doctest::Approx(-1.0 / std::sqrt(1.04)));
    const auto r = eval_verification(scores, 0.6);
    // clean: a-b yes/same ok, a-c ok, a-d ok, a-e ok, b-c wrong -> 4/5
    CHECK(r.c_acc == doctest::Approx(0.8));
    CHECK(*r.asr == doctest::Approx(0.0));
    const auto loose = eval_verification(scores, 0.1);
    CHECK(*loose.asr == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("threshold choice") {
    std::vector<PairScore> s{{true, false, 0.9}, {true, false, 0.8}, {false, false, 0.3}, {false, false, 0.5}};
    const double t = choose_threshold(s);
    CHECK(t == doctest::Approx(0.65));
    CHECK(eval_verification(s, t).c_acc == 1.0);
    CHECK_THROWS_AS(choose_threshold({}), ConfigError);
  }
  CHECK_THROWS_AS(score_pairs({{"x", "y", true, false}}, Embeddings{}), ConfigError);
}

TEST_CASE("nder") {
  CHECK(compute_nder({0.9, 0.9}, {0.9, 0.9}) == doctest::Approx(0.5));
  CHECK(compute_nder({0.8693, 0.9957}, {0.8333, 0.0186}) == doctest::Approx(0.9706).epsilon(1e-4));
  CHECK(compute_nder({0.9, 1.0}, {0.9, 0.0}) == doctest::Approx(1.0));
  CHECK(compute_nder({0.9, 0.1}, {0.1, 0.9}) == doctest::Approx(0.1));
  CHECK(compute_nder({0.9, 0.5}, {0.0, 0.5}) == doctest::Approx(0.05));
  CHECK_THROWS_AS(compute_nder({1.2, 0.5}, {0.5, 0.5}), ConfigError);
  const auto o = defense_outcome({0.9, 1.0}, {0.85, 0.1});
  CHECK(o.nder == doctest::Approx((0.9 - 0.05 + 1) / 2));
}

TEST_CASE("report serialization") {
  EvalReport a;
  a.attack = "semantic:nuts";
  a.c_acc = 0.91;
  a.asr = 0.8;
  a.r_acc = 0.15;
  a.clean_count = 100;
  a.poisoned_count = 80;
  a.excluded_count = 20;
  a.poison_failures = 10;
  EvalReport b;
  b.attack = "badnets";
  b.scenario = scenario_for(distort::DistortionConfig::jpeg(10));
  b.c_acc = 0.5;
  const auto text = reports_to_json({a, b});
  const auto back = reports_from_json(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == a);
  CHECK(back[1] == b);
  CHECK(back[1].asr_undefined());
  CHECK(text.find("\"asr\": null") != std::string::npos);

  const auto csv = sweep_csv({a, b});
  CHECK(csv == "scenario,param,c_acc,asr,r_acc\ndigital,0,0.9100,0.8000,0.1500\njpeg,10,0.5000,,\n");

  const auto table = comparison_table({a, b});
  CHECK(table.find("attack,task,scenario") == 0);
  CHECK(table.find("badnets") < table.find("semantic:nuts"));

  CHECK(task_name(parse_task("detection_gma")) == "detection_gma");
  CHECK_THROWS_AS(parse_task("segmentation"), ConfigError);
  CHECK_THROWS(reports_from_json("{"));
}

TEST_CASE("scenario sweeps") {
  const auto ds = bucket_dataset(4, 6);
  MeanClassifier model(4);
  const auto poisoner = [](const Sample& s, std::size_t) -> std::optional<ImageBuffer> {
    return triggers::apply_blended(s.image, {ImageBuffer(s.image.height(), s.image.width(), 3, 10), 0.9});
  };
  SUBCASE("no distortions gives the digital report only") {
    const auto r = run_scenario_sweep(model, ds, poisoner, {}, 0, "blend");
    REQUIRE(r.size() == 1);
    CHECK(r[0].scenario == Scenario::digital());
    CHECK(r[0].attack == "blend");
    CHECK(*r[0].asr == 1.0);
  }
  SUBCASE("identity distortions reproduce the digital report") {
    const auto r = run_scenario_sweep(model, ds, poisoner,
                                      {distort::DistortionConfig::blur(1), distort::DistortionConfig::noise(0.0, 4)}, 0);
    REQUIRE(r.size() == 3);
    for (int i : {1, 2}) {
      CHECK(r[i].c_acc == r[0].c_acc);
      CHECK(r[i].asr == r[0].asr);
      CHECK(r[i].r_acc == r[0].r_acc);
      CHECK(r[i].scenario.kind == ScenarioKind::kDistortion);
    }
    CHECK(r[1].scenario.distortion == "blur");
    CHECK(r[2].scenario.param == 0.0);
  }
  SUBCASE("sweep entries are range checked") {
    CHECK_THROWS_AS(run_scenario_sweep(model, ds, poisoner, {distort::DistortionConfig::jpeg(80)}, 0), ConfigError);
  }
  SUBCASE("d2p label") {
    CHECK(scenario_for(distort::default_d2p_chain(1)).kind == ScenarioKind::kD2pSim);
  }
}

TEST_CASE("network gradients match finite differences") {
  NetworkShape shape;
  shape.height = 8;
  shape.width = 8;
  shape.channels = 3;
  shape.num_classes = 3;
  shape.conv_channels = {3, 4};
  shape.hidden = 6;
  ConvNet net(shape, 5);
  Rng pixels(21);
  std::vector<ImageBuffer> batch;
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) {
    ImageBuffer img(8, 8, 3);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(pixels.below(256));
    batch.push_back(std::move(img));
    labels.push_back(i % 3);
  }
  std::vector<const ImageBuffer*> imgs;
  for (const auto& b : batch) imgs.push_back(&b);
  const Mat input = net.to_input(imgs);
  std::vector<Mat> grads;
  net.loss_and_gradients(input, labels, grads);
  REQUIRE(grads.size() == net.parameters().size());

  Rng rng(12);
  int checked = 0, agreed = 0;
  const float eps = 2e-3F;
  for (std::size_t p = 0; p < net.parameters().size(); ++p) {
    auto& param = net.parameters()[p];
    for (int trial = 0; trial < 12; ++trial) {
      const auto k = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(param.size())));
      const float saved = param.data()[k];
      std::vector<Mat> dummy;
      param.data()[k] = saved + eps;
      const double up = net.loss_and_gradients(input, labels, dummy);
      param.data()[k] = saved - eps;
      const double down = net.loss_and_gradients(input, labels, dummy);
      param.data()[k] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = grads[p].data()[k];
      ++checked;
      if (std::abs(numeric - analytic) <= 2e-3 + 0.05 * std::abs(numeric)) ++agreed;
      else MESSAGE(p << " " << k << " num " << numeric << " ana " << analytic);
    }
  }
  // Float precision and ReLU/max-pool kinks allow a few misses.
  CHECK(agreed >= checked * 9 / 10);
}

TEST_CASE("network persistence and input mapping") {
  ConvNet net(NetworkShape{}, 3);
  const auto ds = bucket_dataset(10, 1, 32);
  std::vector<const ImageBuffer*> imgs;
  for (const auto& s : ds.samples) imgs.push_back(&s.image);
  const auto path = fs::temp_directory_path() / "vssc_test_model.bin";
  net.save(path);
  const auto back = ConvNet::load(path);
  CHECK(back.shape() == net.shape());
  CHECK((back.logits(imgs) - net.logits(imgs)).cwiseAbs().maxCoeff() == 0.0F);
  CHECK(net.features(imgs).rows() == 128);

  ImageBuffer px(32, 32, 1, 255);
  const ImageBuffer* one[] = {&px};
  const Mat in = net.to_input(one);
  CHECK(in.rows() == 3);
  CHECK(in(0, 0) == doctest::Approx(2.0));

  fs::path junk = fs::temp_directory_path() / "vssc_test_junk.bin";
  const std::vector<std::uint8_t> junk_bytes{1, 2, 3};
  write_file_bytes(junk, junk_bytes);
  CHECK_THROWS_AS(ConvNet::load(junk), DecodeError);
  CHECK_THROWS_AS(ConvNet(NetworkShape{8, 8, 3, 2, {4, 4, 4, 4}, 8}, 1), ConfigError);
}

TEST_CASE("learning rate schedules") {
  LrSchedule s;
  s.kind = LrSchedule::Kind::kCosine;
  s.base_lr = 0.1;
  s.warmup_epochs = 0;
  CHECK(s.at(0, 10) == doctest::Approx(0.1));
  CHECK(s.at(5, 10) == doctest::Approx(0.05));
  s.kind = LrSchedule::Kind::kConstant;
  s.warmup_epochs = 2;
  CHECK(s.at(1, 10) == doctest::Approx(0.05).epsilon(1e-2));
  CHECK(s.at(2, 10) == doctest::Approx(0.1));
  LrSchedule step;
  step.kind = LrSchedule::Kind::kStep;
  step.base_lr = 1.0;
  step.warmup_epochs = 0;
  step.step_epochs = 3;
  step.gamma = 0.5;
  CHECK(step.at(2.5, 10) == doctest::Approx(1.0));
  CHECK(step.at(3, 10) == doctest::Approx(0.5));
  CHECK(step.at(6.5, 10) == doctest::Approx(0.25));
  CHECK(parse_schedule(schedule_name(LrSchedule::Kind::kStep)) == LrSchedule::Kind::kStep);
  CHECK_THROWS_AS(parse_schedule("exp"), ConfigError);
}

TEST_CASE("training on a small shapes set") {
  SynthConfig sc;
  sc.num_classes = 4;
  sc.train_per_class = 100;
  sc.test_per_class = 20;
  sc.seed = 2;
  const auto data = make_shapes_dataset(sc);
  CHECK(data.train.size() == 400);
  CHECK(data.class_names == std::vector<std::string>{"circle", "square", "triangle", "cross"});

  TrainConfig tc;
  tc.epochs = 20;
  tc.batch_size = 16;
  tc.seed = 4;
  tc.shape.conv_channels = {8, 16, 16};
  tc.shape.hidden = 32;
  const auto a = train_classifier(data.train, tc, &data.test);
  const auto b = train_classifier(data.train, tc, &data.test);
  REQUIRE(a.val_acc);
  CHECK(*a.val_acc >= 0.7);
  CHECK(std::abs(*a.val_acc - *b.val_acc) <= 0.01);
  CHECK(a.history.size() == 20);
  CHECK(a.history.back().loss < a.history.front().loss);

  LabeledDataset tiny;
  tiny.num_classes = 4;
  for (int c = 0; c < 4; ++c) tiny.samples.push_back(data.train.samples[c]);
  tc.epochs = 2;
  const auto t = train_classifier(tiny, tc);
  CHECK(t.final_train_acc >= 0.0);

  TrainConfig exploding = tc;
  exploding.lr.base_lr = 1e9;
  exploding.lr.warmup_epochs = 0;
  CHECK_THROWS_AS(train_classifier(data.train, exploding), TrainingError);
}

TEST_CASE("synthetic shapes") {
  const auto a = render_shape(3, 32, 6.0, 9);
  CHECK(a == render_shape(3, 32, 6.0, 9));
  CHECK_FALSE(a == render_shape(3, 32, 6.0, 10));
  CHECK_FALSE(render_shape(0, 32, 0.0, 1) == render_shape(1, 32, 0.0, 1));
  SynthConfig bad;
  bad.num_classes = 11;
  CHECK_THROWS_AS(make_shapes_dataset(bad), ConfigError);
}
