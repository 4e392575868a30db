// humanal command-line tool: simulate, validate, featurize, calibrate,
// evaluate, ablate, stats. All commands are seedable and deterministic;
// output directories are written atomically. Operational failures exit 1,
// configuration/usage problems exit 2, both with an error JSON on stderr.

#include <chrono>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include "CLI11.hpp"

#include "humanal/errors.hpp"
#include "humanal/io.hpp"
#include "humanal/numfmt.hpp"
#include "humanal/pipeline.hpp"
#include "humanal/rng.hpp"

namespace {

using nlohmann::ordered_json;
using namespace humanal;

std::string dump_doc(const ordered_json& j) { return j.dump(2) + "\n"; }

uint64_t fresh_random_seed() {
  std::random_device rd;
  const uint64_t a = (static_cast<uint64_t>(rd()) << 32) | rd();
  const uint64_t b = static_cast<uint64_t>(
      std::chrono::steady_clock::now().time_since_epoch().count());
  return splitmix64(a ^ splitmix64(b));
}

// Precedence: --seed flag, then config seed, then a fresh random seed
// (echoed in effective_config.json so the run stays reproducible).
uint64_t resolve_seed(const std::optional<uint64_t>& cli_seed, const RunConfig& config) {
  if (cli_seed) return *cli_seed;
  if (config.seed) return *config.seed;
  return fresh_random_seed();
}

// Shared flags for commands that read corpus files directly.
struct InputArgs {
  std::string decisions;
  std::string annotators;
  std::string truths;
  bool strict = false;

  void attach(CLI::App* cmd, bool require) {
    auto* d = cmd->add_option("--decisions", decisions, "decisions.jsonl path");
    auto* a = cmd->add_option("--annotators", annotators, "annotators.jsonl path");
    cmd->add_option("--truths", truths, "truths.jsonl path");
    cmd->add_flag("--strict", strict, "reject unknown record fields");
    if (require) {
      d->required();
      a->required();
    }
  }

  CorpusReadResult read() const {
    ReadOptions options;
    options.strict = strict;
    std::optional<std::string> truths_path;
    if (!truths.empty()) truths_path = truths;
    return read_corpus_files(decisions, annotators, truths_path, options);
  }
};

// Loads the corpus named by a run config (or generates one from its
// simulator block), validating it before any work happens.
AnnotationCorpus corpus_for_experiment(const RunConfig& config, bool strict_flag, uint64_t seed,
                                       std::vector<std::string>* warnings) {
  AnnotationCorpus corpus;
  if (config.decisions_path) {
    if (!config.truths_path) {
      throw ConfigError("experiments need ground truth: add inputs.truths to the config");
    }
    ReadOptions options;
    options.strict = config.strict || strict_flag;
    CorpusReadResult read =
        read_corpus_files(*config.decisions_path, *config.annotators_path, config.truths_path,
                          options);
    if (warnings) *warnings = read.warnings;
    corpus = std::move(read.corpus);
  } else if (config.simulator) {
    corpus = generate_corpus(*config.simulator, seed).corpus;
  } else {
    throw ConfigError("config needs either an 'inputs' block or a 'simulator' block");
  }

  const ValidationReport report = validate_corpus(corpus);
  if (!report.ok()) {
    std::string msg = "corpus failed validation: " +
                      std::to_string(report.violations.size()) + " violation(s); first: [" +
                      violation_kind_name(report.violations[0].kind) + "] " +
                      report.violations[0].record + " " + report.violations[0].detail;
    throw ParseError(msg);
  }
  return corpus;
}

int cmd_simulate(const std::string& config_path, const std::optional<uint64_t>& cli_seed,
                 const std::string& out_dir) {
  RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
  const SimConfig sim = config.simulator ? *config.simulator : default_sim_config();
  const uint64_t seed = resolve_seed(cli_seed, config);
  config.seed = seed;
  config.simulator = sim;

  const SimTruth truth = generate_corpus(sim, seed);
  const TargetReport targets = verify_targets(truth.corpus, sim.targets);

  OutputStage out(out_dir);
  out.write("decisions.jsonl", [&] {
    std::string s;
    for (const Decision& d : truth.corpus.decisions) s += decision_line(d) + "\n";
    return s;
  }());
  out.write("annotators.jsonl", [&] {
    std::string s;
    for (const auto& [id, meta] : truth.corpus.annotators) s += annotator_line(meta) + "\n";
    return s;
  }());
  out.write("truths.jsonl", [&] {
    std::string s;
    for (const auto& [key, t] : *truth.corpus.truths) s += truth_line(key, t) + "\n";
    return s;
  }());
  out.write("sim_truth.json", dump_doc(sim_truth_to_json(truth)));
  out.write("target_report.json", dump_doc(target_report_to_json(targets)));
  out.write("effective_config.json", dump_doc(run_config_to_json(config)));
  out.commit();

  ordered_json summary;
  summary["command"] = "simulate";
  summary["seed"] = seed;
  summary["decisions"] = truth.corpus.decisions.size();
  summary["annotators"] = truth.corpus.annotators.size();
  summary["targets_pass"] = targets.all_pass;
  summary["output_dir"] = out.final_dir();
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_validate(const InputArgs& inputs, const std::string& out_dir) {
  const CorpusReadResult read = inputs.read();
  const ValidationReport report = validate_corpus(read.corpus);
  const ordered_json doc = validation_report_to_json(report, read.warnings);
  if (!out_dir.empty()) {
    OutputStage out(out_dir);
    out.write("validation_report.json", dump_doc(doc));
    out.commit();
  }
  std::cout << dump_doc(doc);
  return report.ok() ? 0 : 1;
}

int cmd_featurize(const InputArgs& inputs, const std::string& mask_text,
                  const std::string& out_dir) {
  const FeatureMask mask =
      mask_text.empty() ? FeatureMask::full() : FeatureMask::parse(mask_text);
  const CorpusReadResult read = inputs.read();
  const FeatureMatrix matrix = featurize_corpus(read.corpus, mask);
  const std::string csv = features_csv(read.corpus, matrix);
  if (!out_dir.empty()) {
    OutputStage out(out_dir);
    out.write("features.csv", csv);
    out.commit();
    ordered_json summary;
    summary["command"] = "featurize";
    summary["rows"] = matrix.rows.size();
    summary["columns"] = matrix.columns.size();
    summary["mask"] = mask.to_string();
    summary["output_dir"] = out.final_dir();
    std::cout << summary.dump() << "\n";
  } else {
    std::cout << csv;
  }
  return 0;
}

int cmd_calibrate(const InputArgs& train_inputs, const InputArgs& test_inputs,
                  const std::string& config_path, const std::optional<uint64_t>& cli_seed,
                  const std::string& mask_text, const std::string& out_dir) {
  RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
  const uint64_t seed = resolve_seed(cli_seed, config);
  config.seed = seed;
  if (!mask_text.empty()) config.mask = FeatureMask::parse(mask_text);

  if (train_inputs.truths.empty()) {
    throw ConfigError("calibrate needs --train-truths (training requires ground truth)");
  }
  const CorpusReadResult train = train_inputs.read();
  const CorpusReadResult test = test_inputs.read();
  for (const auto* read : {&train, &test}) {
    const ValidationReport report = validate_corpus(read->corpus);
    if (!report.ok()) {
      throw ParseError("corpus failed validation: " +
                       std::to_string(report.violations.size()) + " violation(s); first: [" +
                       violation_kind_name(report.violations[0].kind) + "] " +
                       report.violations[0].record + " " + report.violations[0].detail);
    }
  }

  const CalibrationRun run = calibrate(train.corpus, test.corpus, config.mask,
                                       config.classifiers, seed, config.cv_folds,
                                       config.selection);

  size_t changed = 0;
  for (const Decision& d : test.corpus.decisions) {
    if (run.calibrated.at(decision_key(d)) != d.label) ++changed;
  }

  OutputStage out(out_dir);
  out.write("calibrated.jsonl",
            calibrated_content(test.corpus, run.calibrated, run.model.spec().kind_name()));
  out.write("model.json", dump_doc(model_to_json(run.model)));
  out.write("selection_report.json",
            dump_doc(selection_report_to_json(run.selection, run.used_fallback)));
  out.write("effective_config.json", dump_doc(run_config_to_json(config)));
  out.commit();

  ordered_json summary;
  summary["command"] = "calibrate";
  summary["seed"] = seed;
  summary["model"] = run.model.spec().name();
  summary["selection_method"] = run.selection.method;
  summary["calibrated"] = run.calibrated.size();
  summary["changed_labels"] = changed;
  summary["output_dir"] = out.final_dir();
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& config_path, const std::optional<uint64_t>& cli_seed,
                 const std::optional<int>& cli_runs, const std::string& setting_text,
                 const std::string& mask_text, bool strict_flag, const std::string& out_dir) {
  RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
  const uint64_t seed = resolve_seed(cli_seed, config);
  config.seed = seed;
  if (cli_runs) config.runs = *cli_runs;
  if (!mask_text.empty()) config.mask = FeatureMask::parse(mask_text);
  if (!setting_text.empty() && setting_text != "all") {
    auto setting = parse_setting(setting_text);
    if (!setting) throw ConfigError("unknown setting '" + setting_text + "'");
    config.settings = {*setting};
  } else if (setting_text == "all") {
    config.settings = {SplitSetting::V1, SplitSetting::V2, SplitSetting::V3, SplitSetting::V4};
  }
  config.validate();

  std::vector<std::string> warnings;
  const AnnotationCorpus corpus = corpus_for_experiment(config, strict_flag, seed, &warnings);
  const EvalReport report =
      run_experiment(corpus, config.settings, config.experiment_options(), seed);

  OutputStage out(out_dir);
  out.write("eval_report.json", dump_doc(eval_report_to_json(report)));
  out.write("table2.csv", table2_csv(report));
  out.write("fig4.csv", fig4_csv(report));
  out.write("effective_config.json", dump_doc(run_config_to_json(config)));
  out.commit();

  ordered_json summary;
  summary["command"] = "evaluate";
  summary["seed"] = seed;
  summary["runs"] = config.runs;
  summary["settings"] = ordered_json::array();
  for (const SettingAggregate& agg : report.aggregates) {
    ordered_json s;
    s["setting"] = setting_name(agg.setting);
    s["baseline_accuracy"] = is_absent(agg.baseline_accuracy)
                                 ? ordered_json(nullptr)
                                 : ordered_json(agg.baseline_accuracy);
    s["humanal_accuracy"] = is_absent(agg.humanal_accuracy) ? ordered_json(nullptr)
                                                            : ordered_json(agg.humanal_accuracy);
    s["improvement_pct"] = is_absent(agg.improvement_pct) ? ordered_json(nullptr)
                                                          : ordered_json(agg.improvement_pct);
    summary["settings"].push_back(std::move(s));
  }
  summary["output_dir"] = out.final_dir();
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::optional<uint64_t>& cli_seed,
               const std::optional<int>& cli_runs, const std::string& setting_text,
               const std::string& mode_text, bool strict_flag, const std::string& out_dir) {
  RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
  const uint64_t seed = resolve_seed(cli_seed, config);
  config.seed = seed;
  if (cli_runs) config.runs = *cli_runs;

  SplitSetting setting = SplitSetting::V4;
  if (!setting_text.empty()) {
    auto parsed = parse_setting(setting_text);
    if (!parsed) throw ConfigError("unknown setting '" + setting_text + "'");
    setting = *parsed;
  }
  config.settings = {setting};
  config.validate();

  std::vector<AblationMode> modes;
  if (mode_text == "isolate") {
    modes = {AblationMode::Isolate};
  } else if (mode_text == "drop") {
    modes = {AblationMode::Drop};
  } else if (mode_text == "all" || mode_text.empty()) {
    modes = {AblationMode::Isolate, AblationMode::Drop};
  } else {
    throw ConfigError("--mode must be one of isolate, drop, all");
  }

  std::vector<std::string> warnings;
  const AnnotationCorpus corpus = corpus_for_experiment(config, strict_flag, seed, &warnings);

  std::vector<AblationTable> tables;
  for (AblationMode mode : modes) {
    tables.push_back(ablation(corpus, setting, mode, config.experiment_options(), seed));
  }

  OutputStage out(out_dir);
  std::string csv;
  for (size_t i = 0; i < tables.size(); ++i) {
    const std::string body = fig5_csv(tables[i]);
    if (i == 0) {
      csv = body;
    } else {
      csv += body.substr(body.find('\n') + 1);  // drop the repeated header
    }
    out.write("ablation_" + tables[i].mode + ".json",
              dump_doc(ablation_to_json(tables[i], seed, config.runs)));
  }
  out.write("fig5.csv", csv);
  out.write("effective_config.json", dump_doc(run_config_to_json(config)));
  out.commit();

  ordered_json summary;
  summary["command"] = "ablate";
  summary["seed"] = seed;
  summary["setting"] = setting_name(setting);
  summary["tables"] = ordered_json::array();
  for (const AblationTable& table : tables) {
    ordered_json t;
    t["mode"] = table.mode;
    t["baseline_accuracy"] = is_absent(table.baseline_accuracy)
                                 ? ordered_json(nullptr)
                                 : ordered_json(table.baseline_accuracy);
    t["full_mask_accuracy"] = is_absent(table.full_mask_accuracy)
                                  ? ordered_json(nullptr)
                                  : ordered_json(table.full_mask_accuracy);
    summary["tables"].push_back(std::move(t));
  }
  summary["output_dir"] = out.final_dir();
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_stats(const InputArgs& inputs, const std::string& out_dir) {
  const CorpusReadResult read = inputs.read();
  const SummaryStats stats = corpus_stats(read.corpus);
  const ordered_json doc = stats_to_json(stats);
  if (!out_dir.empty()) {
    OutputStage out(out_dir);
    out.write("stats.json", dump_doc(doc));
    out.write("fig3.csv", fig3_csv(read.corpus));
    out.commit();
  }
  std::cout << dump_doc(doc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"humanal: calibrated labels from noisy human matching decisions"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic annotation corpus");
  std::string sim_config, sim_out;
  std::optional<uint64_t> sim_seed;
  simulate->add_option("--config", sim_config, "run config JSON (simulator block)");
  simulate->add_option("--seed", sim_seed, "generator seed");
  simulate->add_option("--out", sim_out, "output directory")->required();

  // validate
  auto* validate = app.add_subcommand("validate", "check corpus files against the data model");
  InputArgs validate_inputs;
  validate_inputs.attach(validate, true);
  std::string validate_out;
  validate->add_option("--out", validate_out, "optional output directory");

  // featurize
  auto* featurize = app.add_subcommand("featurize", "emit the behavioral feature matrix");
  InputArgs featurize_inputs;
  featurize_inputs.attach(featurize, true);
  std::string featurize_mask, featurize_out;
  featurize->add_option("--mask", featurize_mask, "feature sets, e.g. Confidence,Time");
  featurize->add_option("--out", featurize_out, "output directory (default: CSV on stdout)");

  // calibrate
  auto* calibrate_cmd =
      app.add_subcommand("calibrate", "train on one corpus, relabel another");
  InputArgs train_inputs, test_inputs;
  std::string cal_config, cal_mask, cal_out;
  std::optional<uint64_t> cal_seed;
  calibrate_cmd->add_option("--train-decisions", train_inputs.decisions)->required();
  calibrate_cmd->add_option("--train-annotators", train_inputs.annotators)->required();
  calibrate_cmd->add_option("--train-truths", train_inputs.truths)->required();
  calibrate_cmd->add_option("--test-decisions", test_inputs.decisions)->required();
  calibrate_cmd->add_option("--test-annotators", test_inputs.annotators)->required();
  calibrate_cmd->add_option("--test-truths", test_inputs.truths);
  calibrate_cmd->add_flag("--strict", train_inputs.strict, "reject unknown record fields");
  calibrate_cmd->add_option("--config", cal_config, "run config JSON");
  calibrate_cmd->add_option("--seed", cal_seed, "calibration seed");
  calibrate_cmd->add_option("--mask", cal_mask, "feature sets to use");
  calibrate_cmd->add_option("--out", cal_out, "output directory")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "run the multi-setting evaluation protocol");
  std::string eval_config, eval_setting, eval_mask, eval_out;
  std::optional<uint64_t> eval_seed;
  std::optional<int> eval_runs;
  bool eval_strict = false;
  evaluate->add_option("--config", eval_config, "run config JSON")->required();
  evaluate->add_option("--seed", eval_seed, "experiment seed");
  evaluate->add_option("--runs", eval_runs, "runs per (setting, domain)");
  evaluate->add_option("--setting", eval_setting, "v1|v2|v3|v4|all");
  evaluate->add_option("--mask", eval_mask, "feature sets to use");
  evaluate->add_flag("--strict", eval_strict, "reject unknown record fields");
  evaluate->add_option("--out", eval_out, "output directory")->required();

  // ablate
  auto* ablate = app.add_subcommand("ablate", "isolate/drop each feature set");
  std::string abl_config, abl_setting, abl_mode, abl_out;
  std::optional<uint64_t> abl_seed;
  std::optional<int> abl_runs;
  bool abl_strict = false;
  ablate->add_option("--config", abl_config, "run config JSON")->required();
  ablate->add_option("--seed", abl_seed, "experiment seed");
  ablate->add_option("--runs", abl_runs, "runs per mask");
  ablate->add_option("--setting", abl_setting, "v1|v2|v3|v4 (default v4)");
  ablate->add_option("--mode", abl_mode, "isolate|drop|all (default all)");
  ablate->add_flag("--strict", abl_strict, "reject unknown record fields");
  ablate->add_option("--out", abl_out, "output directory")->required();

  // stats
  auto* stats = app.add_subcommand("stats", "summary statistics and bucketed time/confidence");
  InputArgs stats_inputs;
  stats_inputs.attach(stats, true);
  std::string stats_out;
  stats->add_option("--out", stats_out, "optional output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    nlohmann::ordered_json err;
    err["error"] = "UsageError";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 2;
  }

  const auto guarded = [](const std::function<int()>& body) {
    try {
      return body();
    } catch (const ConfigError& e) {
      nlohmann::ordered_json err;
      err["error"] = e.type();
      err["message"] = e.what();
      std::cerr << err.dump() << "\n";
      return 2;
    } catch (const Error& e) {
      nlohmann::ordered_json err;
      err["error"] = e.type();
      err["message"] = e.what();
      std::cerr << err.dump() << "\n";
      return 1;
    } catch (const std::exception& e) {
      nlohmann::ordered_json err;
      err["error"] = "InternalError";
      err["message"] = e.what();
      std::cerr << err.dump() << "\n";
      return 1;
    }
  };

  if (*simulate) return guarded([&] { return cmd_simulate(sim_config, sim_seed, sim_out); });
  if (*validate) return guarded([&] { return cmd_validate(validate_inputs, validate_out); });
  if (*featurize) {
    return guarded([&] { return cmd_featurize(featurize_inputs, featurize_mask, featurize_out); });
  }
  if (*calibrate_cmd) {
    test_inputs.strict = train_inputs.strict;
    return guarded([&] {
      return cmd_calibrate(train_inputs, test_inputs, cal_config, cal_seed, cal_mask, cal_out);
    });
  }
  if (*evaluate) {
    return guarded([&] {
      return cmd_evaluate(eval_config, eval_seed, eval_runs, eval_setting, eval_mask, eval_strict,
                          eval_out);
    });
  }
  if (*ablate) {
    return guarded([&] {
      return cmd_ablate(abl_config, abl_seed, abl_runs, abl_setting, abl_mode, abl_strict,
                        abl_out);
    });
  }
  if (*stats) return guarded([&] { return cmd_stats(stats_inputs, stats_out); });
  return 2;
}
