// Python bindings: a thin path/JSON-string bridge over the simulator, the
// calibration pipeline and the evaluation harness. Corpora travel as
// JSON-Lines files, configurations and reports as JSON strings.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "humanal/classifiers.hpp"
#include "humanal/errors.hpp"
#include "humanal/features.hpp"
#include "humanal/harness.hpp"
#include "humanal/io.hpp"
#include "humanal/pipeline.hpp"
#include "humanal/simulator.hpp"
#include "humanal/stats.hpp"
#include "humanal/validation.hpp"

namespace py = pybind11;
using namespace humanal;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string dump_doc(const ordered_json& j) { return j.dump(2) + "\n"; }

RunConfig config_from_text(const std::string& text) {
  if (text.empty()) return RunConfig{};
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ParseError("config: invalid JSON");
  return run_config_from_json(doc);
}

CorpusReadResult read_corpus(const std::string& decisions, const std::string& annotators,
                             const std::string& truths, bool strict) {
  ReadOptions options;
  options.strict = strict;
  std::optional<std::string> truths_path;
  if (!truths.empty()) truths_path = truths;
  return read_corpus_files(decisions, annotators, truths_path, options);
}

void require_valid(const AnnotationCorpus& corpus) {
  const ValidationReport report = validate_corpus(corpus);
  if (!report.ok()) {
    throw ParseError("corpus failed validation: " + std::to_string(report.violations.size()) +
                     " violation(s); first: [" + violation_kind_name(report.violations[0].kind) +
                     "] " + report.violations[0].record + " " + report.violations[0].detail);
  }
}

uint64_t require_seed(const std::optional<uint64_t>& seed, const RunConfig& config) {
  if (seed) return *seed;
  if (config.seed) return *config.seed;
  throw ConfigError("a seed is required: pass seed= or set 'seed' in the config");
}

std::string py_simulate(const std::string& out_dir, uint64_t seed, const std::string& config_json) {
  RunConfig config = config_from_text(config_json);
  const SimConfig sim = config.simulator ? *config.simulator : default_sim_config();
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
  summary["seed"] = seed;
  summary["decisions"] = truth.corpus.decisions.size();
  summary["annotators"] = truth.corpus.annotators.size();
  summary["targets_pass"] = targets.all_pass;
  summary["output_dir"] = out.final_dir();
  return summary.dump();
}

std::string py_validate(const std::string& decisions, const std::string& annotators,
                        const std::string& truths, bool strict) {
  const CorpusReadResult read = read_corpus(decisions, annotators, truths, strict);
  const ValidationReport report = validate_corpus(read.corpus);
  return dump_doc(validation_report_to_json(report, read.warnings));
}

std::string py_featurize(const std::string& decisions, const std::string& annotators,
                         const std::string& mask_text, bool strict) {
  const FeatureMask mask =
      mask_text.empty() ? FeatureMask::full() : FeatureMask::parse(mask_text);
  const CorpusReadResult read = read_corpus(decisions, annotators, "", strict);
  return features_csv(read.corpus, featurize_corpus(read.corpus, mask));
}

std::string py_stats(const std::string& decisions, const std::string& annotators, bool strict) {
  const CorpusReadResult read = read_corpus(decisions, annotators, "", strict);
  return dump_doc(stats_to_json(corpus_stats(read.corpus)));
}

std::string py_calibrate(const std::string& train_decisions, const std::string& train_annotators,
                         const std::string& train_truths, const std::string& test_decisions,
                         const std::string& test_annotators, uint64_t seed,
                         const std::string& mask_text, const std::string& config_json,
                         bool strict) {
  RunConfig config = config_from_text(config_json);
  if (train_truths.empty()) {
    throw ConfigError("calibrate needs train truths (training requires ground truth)");
  }
  if (!mask_text.empty()) config.mask = FeatureMask::parse(mask_text);

  const CorpusReadResult train = read_corpus(train_decisions, train_annotators, train_truths,
                                             strict || config.strict);
  const CorpusReadResult test =
      read_corpus(test_decisions, test_annotators, "", strict || config.strict);
  require_valid(train.corpus);
  require_valid(test.corpus);

  const CalibrationRun run = calibrate(train.corpus, test.corpus, config.mask,
                                       config.classifiers, seed, config.cv_folds,
                                       config.selection);

  ordered_json result;
  result["seed"] = seed;
  result["model"] = run.model.spec().name();
  result["selection"] = selection_report_to_json(run.selection, run.used_fallback);
  result["calibrated_jsonl"] =
      calibrated_content(test.corpus, run.calibrated, run.model.spec().kind_name());
  return result.dump(2);
}

std::string py_evaluate(const std::string& config_json, const std::optional<uint64_t>& seed) {
  RunConfig config = config_from_text(config_json);
  const uint64_t resolved = require_seed(seed, config);
  config.seed = resolved;
  config.validate();

  AnnotationCorpus corpus;
  if (config.decisions_path) {
    if (!config.truths_path) {
      throw ConfigError("experiments need ground truth: add inputs.truths to the config");
    }
    corpus = read_corpus(*config.decisions_path, *config.annotators_path, *config.truths_path,
                         config.strict)
                 .corpus;
  } else if (config.simulator) {
    corpus = generate_corpus(*config.simulator, resolved).corpus;
  } else {
    throw ConfigError("config needs either an 'inputs' block or a 'simulator' block");
  }
  require_valid(corpus);

  const EvalReport report =
      run_experiment(corpus, config.settings, config.experiment_options(), resolved);
  return dump_doc(eval_report_to_json(report));
}

double py_oracle_accuracy(uint64_t seed, const std::string& config_json) {
  const RunConfig config = config_from_text(config_json);
  const SimConfig sim = config.simulator ? *config.simulator : default_sim_config();
  const SimTruth truth = generate_corpus(sim, seed);
  return bayes_oracle_accuracy(truth, truth.corpus);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Calibrated labels from noisy human binary-matching decisions.";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const ParseError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const IoError& e) {
      PyErr_SetString(PyExc_OSError, e.what());
    } catch (const Error& e) {
      PyErr_SetString(PyExc_RuntimeError, e.what());
    }
  });

  m.def("smoothed_confidence", &smoothed_confidence, py::arg("confidence"),
        "Fold a [0, 1] reported confidence at 0.5 into a decisiveness value.");

  m.def(
      "default_config",
      [] {
        RunConfig config;
        config.simulator = default_sim_config();
        return dump_doc(run_config_to_json(config));
      },
      "Default run configuration (including the default simulator block) as JSON.");

  m.def("simulate", &py_simulate, py::arg("out_dir"), py::arg("seed"), py::arg("config") = "",
        "Generate a synthetic corpus into a fresh directory; returns a summary JSON string.");

  m.def("validate", &py_validate, py::arg("decisions"), py::arg("annotators"),
        py::arg("truths") = "", py::arg("strict") = false,
        "Check corpus files against the data model; returns the report as a JSON string.");

  m.def("featurize", &py_featurize, py::arg("decisions"), py::arg("annotators"),
        py::arg("mask") = "", py::arg("strict") = false,
        "Extract behavioral profiles; returns the feature matrix as a CSV string.");

  m.def("stats", &py_stats, py::arg("decisions"), py::arg("annotators"),
        py::arg("strict") = false,
        "Summary statistics (overall and per domain) as a JSON string.");

  m.def("calibrate", &py_calibrate, py::arg("train_decisions"), py::arg("train_annotators"),
        py::arg("train_truths"), py::arg("test_decisions"), py::arg("test_annotators"),
        py::arg("seed"), py::arg("mask") = "", py::arg("config") = "",
        py::arg("strict") = false,
        "Train on one corpus and relabel another; returns model, selection report and the "
        "calibrated records as a JSON string.");

  m.def("evaluate", &py_evaluate, py::arg("config"), py::arg("seed") = std::nullopt,
        "Run the multi-setting evaluation protocol; returns the full report as a JSON string.");

  m.def("oracle_accuracy", &py_oracle_accuracy, py::arg("seed"), py::arg("config") = "",
        "Bayes-oracle accuracy of a simulated corpus (the ceiling for any calibrator).");
}
