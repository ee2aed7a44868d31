#include "vssc/eval/scenario.hpp"

namespace vssc::eval {

Scenario scenario_for(const distort::DistortionConfig& config) {
  Scenario s;
  if (config.kind == distort::DistortionKind::kD2pChain) {
    s.kind = ScenarioKind::kD2pSim;
  } else {
    s.kind = ScenarioKind::kDistortion;
    s.distortion = distort::kind_name(config.kind);
  }
  s.param = config.param();
  return s;
}

EvalReport evaluate_under(const Classifier& model, const LabeledDataset& clean_test, const PoisonedTestSet& poisoned,
                          const distort::DistortionConfig& config, int target) {
  config.validate();
  LabeledDataset clean = clean_test;
  for (std::size_t i = 0; i < clean.size(); ++i)
    clean.samples[i].image = distort::apply_distortion(clean.samples[i].image, distort::for_sample(config, i)).image;
  PoisonedTestSet pois = poisoned;
  for (std::size_t k = 0; k < pois.samples.size(); ++k)
    pois.samples[k].image =
        distort::apply_distortion(pois.samples[k].image, distort::for_sample(config, pois.source_indices[k])).image;
  auto report = eval_classification(model, clean, pois, target);
  report.scenario = scenario_for(config);
  return report;
}

std::vector<EvalReport> run_scenario_sweep(const Classifier& model, const LabeledDataset& clean_test,
                                           const PoisonedTestSet& poisoned,
                                           const std::vector<distort::DistortionConfig>& distortions, int target,
                                           const std::string& attack) {
  for (const auto& d : distortions) d.validate_sweep_entry();
  std::vector<EvalReport> reports;
  reports.push_back(eval_classification(model, clean_test, poisoned, target));
  for (const auto& d : distortions) reports.push_back(evaluate_under(model, clean_test, poisoned, d, target));
  for (auto& r : reports) r.attack = attack;
  return reports;
}

std::vector<EvalReport> run_scenario_sweep(const Classifier& model, const LabeledDataset& clean_test,
                                           const Poisoner& poisoner,
                                           const std::vector<distort::DistortionConfig>& distortions, int target,
                                           const std::string& attack) {
  for (const auto& d : distortions) d.validate_sweep_entry();
  const auto poisoned = build_poisoned_test_set(clean_test, target, poisoner);
  return run_scenario_sweep(model, clean_test, poisoned, distortions, target, attack);
}

}  // namespace vssc::eval
