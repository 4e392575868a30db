#pragma once

// Cross-validation harness: the four split settings, the accuracy metric,
// multi-run experiments with per-row derived seeds, and the isolate/drop
// feature-set ablation.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "humanal/classifiers.hpp"
#include "humanal/corpus.hpp"
#include "humanal/pipeline.hpp"

namespace humanal {

// What train and test may share: domain, samples, users.
enum class SplitSetting { V1, V2, V3, V4 };

struct SettingFlags {
  bool same_domain;
  bool same_samples;
  bool same_users;
};

SettingFlags setting_flags(SplitSetting setting);
const char* setting_name(SplitSetting setting);
std::optional<SplitSetting> parse_setting(const std::string& name);  // accepts "v3" or "V3"

struct SplitResult {
  AnnotationCorpus train;
  AnnotationCorpus test;
};

// Partitions a corpus for one setting.
//   V1: users split 70/30 inside one domain; both sides restricted to the
//       samples they share, so the sample sets are identical.
//   V2: samples split 70/30; both sides restricted to users that appear on
//       both, so the user sets are identical.
//   V3: users and samples each split 70/30; train = train-users on
//       train-samples, test = test-users on test-samples.
//   V4: test = the held-out domain, train = every other domain.
// V1-V3 require a single-domain corpus; V4 requires >= 2 domains and a
// held-out domain name. Throws InsufficientPopulationError when any side
// of the partition would be empty.
SplitResult make_split(const AnnotationCorpus& corpus, SplitSetting setting, double train_frac,
                       uint64_t seed, const std::optional<std::string>& held_out_domain = {});

// Fraction of predicted labels matching the ground truth. Throws
// MissingTruthError when a predicted key has no truth entry.
double accuracy(const LabelMap& predicted, const TruthMap& truths);

struct ExperimentOptions {
  int runs = 20;
  double train_frac = 0.7;
  int cv_folds = 5;
  SelectionMode selection_mode = SelectionMode::CrossValidation;
  bool vary_split = true;       // redraw the split each run
  bool vary_model_seed = true;  // reseed classifiers each run
  std::vector<ModelSpec> specs = default_model_pool();
  FeatureMask base_mask = FeatureMask::full();
};

// One (setting, domain, run) evaluation. Seeds are recorded so any row can
// be reproduced in isolation.
struct RowResult {
  SplitSetting setting = SplitSetting::V1;
  std::string domain;  // the evaluated (for V4: held-out) domain
  int run = 0;
  bool skipped = false;
  std::string skip_reason;
  double baseline_accuracy = kAbsent;
  double humanal_accuracy = kAbsent;
  uint64_t split_seed = 0;
  uint64_t calib_seed = 0;
  std::string mask_used;
  std::string model_name;  // chosen classifier
  size_t test_decisions = 0;
};

struct CellResult {  // per (setting, domain), averaged over runs
  SplitSetting setting = SplitSetting::V1;
  std::string domain;
  int runs_completed = 0;
  double baseline_accuracy = kAbsent;
  double humanal_accuracy = kAbsent;
  double improvement_pct = kAbsent;
};

struct SettingAggregate {  // per setting, averaged over domains and runs
  SplitSetting setting = SplitSetting::V1;
  int runs_completed = 0;
  double baseline_accuracy = kAbsent;
  double humanal_accuracy = kAbsent;
  double improvement_pct = kAbsent;
};

struct AblationRow {
  std::string mode;         // "isolate" or "drop"
  std::string feature_set;  // the set isolated or dropped
  int runs_completed = 0;
  double accuracy = kAbsent;
  double improvement_pct = kAbsent;  // vs. the baseline labels
};

struct AblationTable {
  SplitSetting setting = SplitSetting::V4;
  std::string mode;
  double baseline_accuracy = kAbsent;   // same splits, annotator's own labels
  double full_mask_accuracy = kAbsent;  // same splits, all feature sets
  std::vector<AblationRow> rows;
};

struct EvalReport {
  uint64_t seed = 0;
  int runs = 0;
  std::vector<RowResult> rows;
  std::vector<CellResult> cells;
  std::vector<SettingAggregate> aggregates;
  std::vector<AblationTable> ablations;  // filled by the ablation command
};

// Runs the (setting x domain x run) matrix: split, calibrate, score both
// the baseline and the calibrated labels. V1 rows force-exclude the
// Majority feature set. Rows whose split or calibration fails are recorded
// as skipped and never abort the others.
EvalReport run_experiment(const AnnotationCorpus& corpus,
                          const std::vector<SplitSetting>& settings,
                          const ExperimentOptions& options, uint64_t seed);

// Isolate (mask = {set}) or Drop (mask = all minus {set}) each feature
// set under one setting; rows are paired with the full-mask and baseline
// references through identical per-run split seeds.
enum class AblationMode { Isolate, Drop };

AblationTable ablation(const AnnotationCorpus& corpus, SplitSetting setting, AblationMode mode,
                       const ExperimentOptions& options, uint64_t seed);

}  // namespace humanal
