#pragma once

// File formats and run configuration: JSON-Lines corpus files with
// millisecond-integer times, CSV table emitters, JSON report builders,
// and the atomically-written output directory. Writers produce fixed key
// orders and shortest round-trip numbers so equal inputs give equal bytes.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "humanal/classifiers.hpp"
#include "humanal/corpus.hpp"
#include "humanal/features.hpp"
#include "humanal/harness.hpp"
#include "humanal/simulator.hpp"
#include "humanal/stats.hpp"
#include "humanal/validation.hpp"

namespace humanal {

// --- corpus files ----------------------------------------------------------

struct ReadOptions {
  bool strict = false;  // unknown record fields: error (strict) or warning
};

struct CorpusReadResult {
  AnnotationCorpus corpus;
  std::vector<std::string> warnings;
};

// decisions.jsonl: one object per decision with integer millisecond times.
std::string decision_line(const Decision& d);
// annotators.jsonl: one object per annotator.
std::string annotator_line(const AnnotatorMeta& meta);
// truths.jsonl: one object per (domain, sample).
std::string truth_line(const SampleKey& key, int truth);

void write_decisions_file(const std::string& path, const AnnotationCorpus& corpus);
void write_annotators_file(const std::string& path, const AnnotationCorpus& corpus);
void write_truths_file(const std::string& path, const TruthMap& truths);

// Reads and joins the corpus files. Structural problems (bad JSON, missing
// or mistyped fields, duplicate annotator or conflicting truth records)
// throw ParseError with the file and line; value-range checking is left to
// validate_corpus. The corpus carries truths iff truths_path is given.
CorpusReadResult read_corpus_files(const std::string& decisions_path,
                                   const std::string& annotators_path,
                                   const std::optional<std::string>& truths_path,
                                   const ReadOptions& options = {});

// calibrated.jsonl: original and calibrated label per test decision, in
// test corpus order. Every decision must have an entry in `calibrated`.
std::string calibrated_content(const AnnotationCorpus& test, const LabelMap& calibrated,
                               const std::string& model_kind);
void write_calibrated_file(const std::string& path, const AnnotationCorpus& test,
                           const LabelMap& calibrated, const std::string& model_kind);

// --- plain file helpers ------------------------------------------------------

std::string read_text_file(const std::string& path);             // throws IoError
void write_text_file(const std::string& path, const std::string& content);

// --- CSV emitters ------------------------------------------------------------

// Feature matrix with identity columns; absent values spelled "NA".
std::string features_csv(const AnnotationCorpus& corpus, const FeatureMatrix& matrix);

// Aggregated per-setting accuracies (baseline vs calibrated).
std::string table2_csv(const EvalReport& report);

// Per-(setting, domain) accuracies.
std::string fig4_csv(const EvalReport& report);

// Isolate/drop ablation rows.
std::string fig5_csv(const AblationTable& table);

// Ten fixed-width confidence buckets vs mean within-domain z-scored time.
std::string fig3_csv(const AnnotationCorpus& corpus);

// --- JSON report builders ------------------------------------------------------

nlohmann::ordered_json stats_to_json(const SummaryStats& stats);
nlohmann::ordered_json validation_report_to_json(const ValidationReport& report,
                                                 const std::vector<std::string>& warnings);
nlohmann::ordered_json target_report_to_json(const TargetReport& report);
nlohmann::ordered_json eval_report_to_json(const EvalReport& report);
nlohmann::ordered_json ablation_to_json(const AblationTable& table, uint64_t seed, int runs);
nlohmann::ordered_json selection_report_to_json(const SelectionReport& report,
                                                bool used_fallback);
nlohmann::ordered_json sim_truth_to_json(const SimTruth& truth);

// --- run configuration -----------------------------------------------------

struct RunConfig {
  std::optional<std::string> decisions_path;
  std::optional<std::string> annotators_path;
  std::optional<std::string> truths_path;
  std::vector<SplitSetting> settings = {SplitSetting::V1, SplitSetting::V2, SplitSetting::V3,
                                        SplitSetting::V4};
  int runs = 20;
  double train_frac = 0.7;
  int cv_folds = 5;
  std::optional<uint64_t> seed;
  bool strict = false;
  FeatureMask mask = FeatureMask::full();
  std::vector<ModelSpec> classifiers = default_model_pool();
  bool vary_split = true;
  bool vary_model_seed = true;
  SelectionMode selection = SelectionMode::CrossValidation;
  std::optional<SimConfig> simulator;

  // Throws ConfigError on out-of-range values or an unusable combination.
  void validate() const;
  ExperimentOptions experiment_options() const;
};

// Parses and validates a config file. Unknown keys are always an error
// here: a misspelled option must not silently fall back to its default.
RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json(const nlohmann::json& doc);

// Defaults-resolved echo of the configuration. The output directory and
// other invocation-only details are deliberately not part of it.
nlohmann::ordered_json run_config_to_json(const RunConfig& config);

SimConfig sim_config_from_json(const nlohmann::json& doc);
nlohmann::ordered_json sim_config_to_json(const SimConfig& config);

std::vector<ModelSpec> classifiers_from_json(const nlohmann::json& list);
nlohmann::ordered_json classifiers_to_json(const std::vector<ModelSpec>& specs);

// --- atomic output directory -------------------------------------------------

// Files are staged in a sibling directory and renamed into place by
// commit(), so a crashed run never leaves a half-written output directory.
// Refuses to target an existing directory.
class OutputStage {
public:
  explicit OutputStage(const std::string& final_dir);
  ~OutputStage();
  OutputStage(const OutputStage&) = delete;
  OutputStage& operator=(const OutputStage&) = delete;

  // Writes relative_path (no subdirectories) inside the staged directory.
  void write(const std::string& relative_path, const std::string& content);
  void commit();

  const std::string& final_dir() const { return final_dir_; }

private:
  std::string final_dir_;
  std::string staging_dir_;
  bool committed_ = false;
};

}  // namespace humanal
