// Calibration pipeline: featurize, select, fit, relabel.

#include "humanal/pipeline.hpp"

#include "humanal/errors.hpp"
#include "humanal/rng.hpp"

namespace humanal {

CalibrationRun calibrate(const AnnotationCorpus& train, const AnnotationCorpus& test,
                         const FeatureMask& mask, const std::vector<ModelSpec>& specs,
                         uint64_t seed, int cv_folds, SelectionMode mode) {
  if (!train.has_truths())
    throw ConfigError("calibration requires ground truth on the training corpus");
  if (train.decisions.empty()) throw ConfigError("training corpus has no decisions");
  if (specs.empty()) throw ConfigError("model pool is empty");

  // Training targets are the true labels of the answered samples.
  std::vector<int> train_y;
  train_y.reserve(train.decisions.size());
  for (const Decision& d : train.decisions) {
    const std::optional<int> truth = train.truth_of(d);
    if (!truth)
      throw MissingTruthError({d.domain.name() + "/" + d.sample_id});
    train_y.push_back(*truth);
  }

  const FeatureMatrix train_x = featurize_corpus(train, mask);

  // Independent derived seeds: one for fold assignment, one per spec.
  const uint64_t fold_seed = derive_seed(seed, 1);
  std::vector<ModelSpec> seeded = specs;
  for (size_t i = 0; i < seeded.size(); ++i)
    seeded[i].seed = derive_seed(seed, 2, static_cast<uint64_t>(i));

  bool used_fallback = false;
  std::optional<SelectionResult> selected;
  try {
    selected = select_model(seeded, train_x, train_y, mask, cv_folds, fold_seed, mode);
  } catch (const DegenerateTrainingSetError&) {
    // Single-class training data: fall back to predicting that class.
    size_t ones = 0;
    for (int y : train_y) ones += static_cast<size_t>(y);
    const int klass = 2 * ones >= train_y.size() ? 1 : 0;
    ModelSpec constant{ConstantParams{klass}, derive_seed(seed, 3)};
    SelectionReport report;
    report.spec_names = {constant.name()};
    report.mean_accuracy = {static_cast<double>(std::max(ones, train_y.size() - ones)) /
                            static_cast<double>(train_y.size())};
    report.chosen_index = 0;
    report.fold_seed = fold_seed;
    report.folds_used = 0;
    report.method = "fallback_constant";
    selected = SelectionResult{fit(constant, train_x, train_y, mask), std::move(report)};
    used_fallback = true;
  }

  // Test features are computed against test-cohort peers only.
  const FeatureMatrix test_x = featurize_corpus(test, mask);
  const std::vector<int> predicted = selected->model.predict_matrix(test_x);

  CalibrationRun run{mask, std::move(selected->report), std::move(selected->model), {}, seed,
                     used_fallback};
  for (size_t i = 0; i < test.decisions.size(); ++i)
    run.calibrated[decision_key(test.decisions[i])] = predicted[i];
  return run;
}

LabelMap baseline_labels(const AnnotationCorpus& corpus) {
  LabelMap labels;
  for (const Decision& d : corpus.decisions) labels[decision_key(d)] = d.label;
  return labels;
}

std::map<SampleKey, int> majority_vote_labels(const AnnotationCorpus& corpus, bool tie_to_one) {
  std::map<SampleKey, std::pair<size_t, size_t>> counts;  // ones, total
  for (const Decision& d : corpus.decisions) {
    auto& [ones, total] = counts[sample_key(d)];
    ones += static_cast<size_t>(d.label);
    ++total;
  }
  std::map<SampleKey, int> votes;
  for (const auto& [key, count] : counts) {
    const auto& [ones, total] = count;
    const size_t zeros = total - ones;
    if (ones > zeros) votes[key] = 1;
    else if (zeros > ones) votes[key] = 0;
    else votes[key] = tie_to_one ? 1 : 0;
  }
  return votes;
}

}  // namespace humanal
