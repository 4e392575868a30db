// File formats, configuration, and report serialization.

#include "humanal/io.hpp"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "humanal/errors.hpp"
#include "humanal/numfmt.hpp"

namespace humanal {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string json_string(const std::string& s) { return json(s).dump(); }

// Numbers that may be absent serialize as JSON null.
ordered_json jnum(double v) {
  if (is_absent(v)) return nullptr;
  return v;
}

std::string where_of(const std::string& path, size_t line) {
  return path + ":" + std::to_string(line);
}

const json& require_field(const json& doc, const char* key, const std::string& where) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(where + ": missing field '" + std::string(key) + "'");
  return *it;
}

std::string require_string(const json& doc, const char* key, const std::string& where) {
  const json& v = require_field(doc, key, where);
  if (!v.is_string()) throw ParseError(where + ": field '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

long long require_integer(const json& doc, const char* key, const std::string& where) {
  const json& v = require_field(doc, key, where);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw ParseError(where + ": field '" + std::string(key) + "' must be an integer");
  }
  return v.get<long long>();
}

double require_number(const json& doc, const char* key, const std::string& where) {
  const json& v = require_field(doc, key, where);
  if (!v.is_number()) throw ParseError(where + ": field '" + std::string(key) + "' must be a number");
  return v.get<double>();
}

// Checks one record's key set against the known fields.
template <size_t N>
void check_fields(const json& doc, const char* (&known)[N], const std::string& where,
                  const ReadOptions& options, std::vector<std::string>* warnings) {
  for (const auto& item : doc.items()) {
    bool found = false;
    for (const char* k : known) {
      if (item.key() == k) {
        found = true;
        break;
      }
    }
    if (found) continue;
    if (options.strict) throw ParseError(where + ": unknown field '" + item.key() + "'");
    if (warnings) warnings->push_back(where + ": unknown field '" + item.key() + "' ignored");
  }
}

// Calls fn(line_number, parsed_object) for every non-empty line.
template <typename Fn>
void for_each_record(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) throw ParseError(where_of(path, lineno) + ": invalid JSON");
    if (!doc.is_object()) throw ParseError(where_of(path, lineno) + ": record must be an object");
    fn(lineno, doc);
  }
}

long long seconds_to_ms(double seconds) { return std::llround(seconds * 1000.0); }

}  // namespace

// --- corpus files ------------------------------------------------------------

std::string decision_line(const Decision& d) {
  std::string out = "{\"annotator_id\":" + json_string(d.annotator_id);
  out += ",\"domain\":" + json_string(d.domain.name());
  out += ",\"sample_id\":" + json_string(d.sample_id);
  out += ",\"label\":" + std::to_string(d.label);
  out += ",\"confidence\":" + format_confidence(d.confidence);
  out += ",\"decision_time_ms\":" + std::to_string(seconds_to_ms(d.decision_time));
  out += ",\"position\":" + std::to_string(d.position);
  out += "}";
  return out;
}

std::string annotator_line(const AnnotatorMeta& meta) {
  std::string out = "{\"annotator_id\":" + json_string(meta.annotator_id);
  out += ",\"riddle_score\":" + format_double(meta.riddle_score);
  out += ",\"total_session_time_ms\":" + std::to_string(seconds_to_ms(meta.total_session_time));
  out += "}";
  return out;
}

std::string truth_line(const SampleKey& key, int truth) {
  std::string out = "{\"domain\":" + json_string(key.domain_name);
  out += ",\"sample_id\":" + json_string(key.sample_id);
  out += ",\"truth\":" + std::to_string(truth);
  out += "}";
  return out;
}

void write_decisions_file(const std::string& path, const AnnotationCorpus& corpus) {
  std::string content;
  for (const Decision& d : corpus.decisions) content += decision_line(d) + "\n";
  write_text_file(path, content);
}

void write_annotators_file(const std::string& path, const AnnotationCorpus& corpus) {
  std::string content;
  for (const auto& [id, meta] : corpus.annotators) content += annotator_line(meta) + "\n";
  write_text_file(path, content);
}

void write_truths_file(const std::string& path, const TruthMap& truths) {
  std::string content;
  for (const auto& [key, truth] : truths) content += truth_line(key, truth) + "\n";
  write_text_file(path, content);
}

CorpusReadResult read_corpus_files(const std::string& decisions_path,
                                   const std::string& annotators_path,
                                   const std::optional<std::string>& truths_path,
                                   const ReadOptions& options) {
  CorpusReadResult result;

  static const char* kDecisionFields[] = {"annotator_id", "domain",           "sample_id",
                                          "label",        "confidence",       "decision_time_ms",
                                          "position"};
  for_each_record(decisions_path, [&](size_t lineno, const json& doc) {
    const std::string where = where_of(decisions_path, lineno);
    check_fields(doc, kDecisionFields, where, options, &result.warnings);
    Decision d;
    d.annotator_id = require_string(doc, "annotator_id", where);
    d.domain = Domain(require_string(doc, "domain", where));
    d.sample_id = require_string(doc, "sample_id", where);
    d.label = static_cast<int>(require_integer(doc, "label", where));
    d.confidence = require_number(doc, "confidence", where);
    d.decision_time = static_cast<double>(require_integer(doc, "decision_time_ms", where)) / 1000.0;
    d.position = static_cast<int>(require_integer(doc, "position", where));
    result.corpus.decisions.push_back(std::move(d));
  });

  static const char* kAnnotatorFields[] = {"annotator_id", "riddle_score",
                                           "total_session_time_ms"};
  for_each_record(annotators_path, [&](size_t lineno, const json& doc) {
    const std::string where = where_of(annotators_path, lineno);
    check_fields(doc, kAnnotatorFields, where, options, &result.warnings);
    AnnotatorMeta meta;
    meta.annotator_id = require_string(doc, "annotator_id", where);
    meta.riddle_score = require_number(doc, "riddle_score", where);
    meta.total_session_time =
        static_cast<double>(require_integer(doc, "total_session_time_ms", where)) / 1000.0;
    if (result.corpus.annotators.count(meta.annotator_id)) {
      throw ParseError(where + ": duplicate annotator_id '" + meta.annotator_id + "'");
    }
    result.corpus.annotators[meta.annotator_id] = std::move(meta);
  });

  if (truths_path) {
    static const char* kTruthFields[] = {"domain", "sample_id", "truth"};
    result.corpus.truths.emplace();
    for_each_record(*truths_path, [&](size_t lineno, const json& doc) {
      const std::string where = where_of(*truths_path, lineno);
      check_fields(doc, kTruthFields, where, options, &result.warnings);
      SampleKey key{require_string(doc, "domain", where), require_string(doc, "sample_id", where)};
      const int truth = static_cast<int>(require_integer(doc, "truth", where));
      auto [it, inserted] = result.corpus.truths->emplace(key, truth);
      if (!inserted && it->second != truth) {
        throw ParseError(where + ": conflicting truth for " + key.domain_name + "/" +
                         key.sample_id);
      }
    });
  }

  return result;
}

std::string calibrated_content(const AnnotationCorpus& test, const LabelMap& calibrated,
                               const std::string& model_kind) {
  std::string content;
  for (const Decision& d : test.decisions) {
    auto it = calibrated.find(decision_key(d));
    if (it == calibrated.end()) {
      throw ConfigError("no calibrated label for " + d.annotator_id + "/" + d.domain.name() +
                        "/" + d.sample_id);
    }
    std::string line = "{\"annotator_id\":" + json_string(d.annotator_id);
    line += ",\"domain\":" + json_string(d.domain.name());
    line += ",\"sample_id\":" + json_string(d.sample_id);
    line += ",\"original_label\":" + std::to_string(d.label);
    line += ",\"humanal_label\":" + std::to_string(it->second);
    line += ",\"model_kind\":" + json_string(model_kind);
    line += "}";
    content += line + "\n";
  }
  return content;
}

void write_calibrated_file(const std::string& path, const AnnotationCorpus& test,
                           const LabelMap& calibrated, const std::string& model_kind) {
  write_text_file(path, calibrated_content(test, calibrated, model_kind));
}

// --- plain file helpers --------------------------------------------------------

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path);
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

// --- CSV emitters --------------------------------------------------------------

namespace {

std::string csv_escape(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    out += c;
    if (c == '"') out += '"';
  }
  out += "\"";
  return out;
}

std::string csv_number(double v) { return is_absent(v) ? "NA" : format_double(v); }

}  // namespace

std::string features_csv(const AnnotationCorpus& corpus, const FeatureMatrix& matrix) {
  std::string out = "annotator_id,domain,sample_id";
  for (Slot slot : matrix.columns) out += std::string(",") + slot_name(slot);
  out += "\n";
  for (size_t i = 0; i < matrix.rows.size(); ++i) {
    const Decision& d = corpus.decisions[i];
    out += csv_escape(d.annotator_id) + "," + csv_escape(d.domain.name()) + "," +
           csv_escape(d.sample_id);
    for (double v : matrix.rows[i]) out += "," + csv_number(v);
    out += "\n";
  }
  return out;
}

std::string table2_csv(const EvalReport& report) {
  std::string out = "setting,runs_completed,baseline_accuracy,humanal_accuracy,improvement_pct\n";
  for (const SettingAggregate& agg : report.aggregates) {
    out += std::string(setting_name(agg.setting)) + "," + std::to_string(agg.runs_completed) +
           "," + csv_number(agg.baseline_accuracy) + "," + csv_number(agg.humanal_accuracy) +
           "," + csv_number(agg.improvement_pct) + "\n";
  }
  return out;
}

std::string fig4_csv(const EvalReport& report) {
  std::string out =
      "setting,domain,runs_completed,baseline_accuracy,humanal_accuracy,improvement_pct\n";
  for (const CellResult& cell : report.cells) {
    out += std::string(setting_name(cell.setting)) + "," + csv_escape(cell.domain) + "," +
           std::to_string(cell.runs_completed) + "," + csv_number(cell.baseline_accuracy) + "," +
           csv_number(cell.humanal_accuracy) + "," + csv_number(cell.improvement_pct) + "\n";
  }
  return out;
}

std::string fig5_csv(const AblationTable& table) {
  std::string out =
      "mode,feature_set,runs_completed,accuracy,improvement_pct,baseline_accuracy,full_mask_"
      "accuracy\n";
  for (const AblationRow& row : table.rows) {
    out += row.mode + "," + row.feature_set + "," + std::to_string(row.runs_completed) + "," +
           csv_number(row.accuracy) + "," + csv_number(row.improvement_pct) + "," +
           csv_number(table.baseline_accuracy) + "," + csv_number(table.full_mask_accuracy) +
           "\n";
  }
  return out;
}

std::string fig3_csv(const AnnotationCorpus& corpus) {
  // Within-domain z-scores keep the per-domain time scales from swamping
  // the shape of the time-vs-confidence relationship.
  std::map<std::string, std::vector<double>> times_by_domain;
  for (const Decision& d : corpus.decisions) {
    times_by_domain[d.domain.name()].push_back(d.decision_time);
  }
  std::map<std::string, std::pair<double, double>> scale;  // domain -> (mean, sd)
  for (const auto& [name, times] : times_by_domain) {
    const double mean = mean_of(times);
    const double sd = std::sqrt(population_variance(times, mean));
    scale[name] = {mean, sd};
  }

  double sums[10] = {};
  size_t counts[10] = {};
  for (const Decision& d : corpus.decisions) {
    const auto& [mean, sd] = scale[d.domain.name()];
    const double z = sd > 0.0 ? (d.decision_time - mean) / sd : 0.0;
    int idx = static_cast<int>(std::floor(d.confidence * 10.0));
    idx = std::min(std::max(idx, 0), 9);
    sums[idx] += z;
    counts[idx] += 1;
  }

  std::string out = "bucket,confidence_lo,confidence_hi,count,mean_normalized_time\n";
  for (int i = 0; i < 10; ++i) {
    const double lo = i / 10.0;
    const double hi = (i + 1) / 10.0;
    out += std::to_string(i + 1) + "," + format_double(lo) + "," + format_double(hi) + "," +
           std::to_string(counts[i]) + "," +
           (counts[i] ? format_double(sums[i] / counts[i]) : "NA") + "\n";
  }
  return out;
}

// --- JSON report builders --------------------------------------------------------

namespace {

ordered_json stats_block_to_json(const StatsBlock& block) {
  ordered_json j;
  j["count"] = block.count;
  j["mean_time"] = jnum(block.mean_time);
  j["mean_confidence"] = jnum(block.mean_confidence);
  j["mean_smoothed_confidence"] = jnum(block.mean_smoothed_confidence);
  j["time_confidence_corr"] =
      block.time_confidence_corr ? ordered_json(*block.time_confidence_corr) : nullptr;
  return j;
}

}  // namespace

ordered_json stats_to_json(const SummaryStats& stats) {
  ordered_json j;
  j["format_version"] = 1;
  j["overall"] = stats_block_to_json(stats.overall);
  j["per_domain"] = ordered_json::object();
  for (const auto& [name, block] : stats.per_domain) {
    j["per_domain"][name] = stats_block_to_json(block);
  }
  return j;
}

ordered_json validation_report_to_json(const ValidationReport& report,
                                       const std::vector<std::string>& warnings) {
  ordered_json j;
  j["format_version"] = 1;
  j["ok"] = report.ok();
  j["violation_count"] = report.violations.size();
  j["violations"] = ordered_json::array();
  for (const Violation& v : report.violations) {
    ordered_json item;
    item["kind"] = violation_kind_name(v.kind);
    item["record"] = v.record;
    item["detail"] = v.detail;
    j["violations"].push_back(std::move(item));
  }
  j["warnings"] = warnings;
  return j;
}

ordered_json target_report_to_json(const TargetReport& report) {
  ordered_json j;
  j["format_version"] = 1;
  j["all_pass"] = report.all_pass;
  j["checks"] = ordered_json::array();
  for (const TargetCheck& check : report.checks) {
    ordered_json item;
    item["statistic"] = check.statistic;
    item["target"] = check.target;
    item["tolerance"] = check.tolerance;
    item["actual"] = jnum(check.actual);
    item["pass"] = check.pass;
    j["checks"].push_back(std::move(item));
  }
  return j;
}

ordered_json eval_report_to_json(const EvalReport& report) {
  ordered_json j;
  j["format_version"] = 1;
  j["seed"] = report.seed;
  j["runs"] = report.runs;

  j["settings"] = ordered_json::array();
  for (const SettingAggregate& agg : report.aggregates) {
    ordered_json s;
    s["setting"] = setting_name(agg.setting);
    const SettingFlags flags = setting_flags(agg.setting);
    s["same_domain"] = flags.same_domain;
    s["same_samples"] = flags.same_samples;
    s["same_users"] = flags.same_users;
    s["runs_completed"] = agg.runs_completed;
    s["baseline_accuracy"] = jnum(agg.baseline_accuracy);
    s["humanal_accuracy"] = jnum(agg.humanal_accuracy);
    s["improvement_pct"] = jnum(agg.improvement_pct);
    s["domains"] = ordered_json::array();
    for (const CellResult& cell : report.cells) {
      if (cell.setting != agg.setting) continue;
      ordered_json c;
      c["domain"] = cell.domain;
      c["runs_completed"] = cell.runs_completed;
      c["baseline_accuracy"] = jnum(cell.baseline_accuracy);
      c["humanal_accuracy"] = jnum(cell.humanal_accuracy);
      c["improvement_pct"] = jnum(cell.improvement_pct);
      s["domains"].push_back(std::move(c));
    }
    j["settings"].push_back(std::move(s));
  }

  j["rows"] = ordered_json::array();
  for (const RowResult& row : report.rows) {
    ordered_json r;
    r["setting"] = setting_name(row.setting);
    r["domain"] = row.domain;
    r["run"] = row.run;
    r["skipped"] = row.skipped;
    r["skip_reason"] = row.skip_reason;
    r["baseline_accuracy"] = jnum(row.baseline_accuracy);
    r["humanal_accuracy"] = jnum(row.humanal_accuracy);
    r["mask"] = row.mask_used;
    r["model"] = row.model_name;
    r["split_seed"] = row.split_seed;
    r["calib_seed"] = row.calib_seed;
    r["test_decisions"] = row.test_decisions;
    j["rows"].push_back(std::move(r));
  }
  return j;
}

ordered_json ablation_to_json(const AblationTable& table, uint64_t seed, int runs) {
  ordered_json j;
  j["format_version"] = 1;
  j["seed"] = seed;
  j["runs"] = runs;
  j["setting"] = setting_name(table.setting);
  j["mode"] = table.mode;
  j["baseline_accuracy"] = jnum(table.baseline_accuracy);
  j["full_mask_accuracy"] = jnum(table.full_mask_accuracy);
  j["rows"] = ordered_json::array();
  for (const AblationRow& row : table.rows) {
    ordered_json r;
    r["feature_set"] = row.feature_set;
    r["runs_completed"] = row.runs_completed;
    r["accuracy"] = jnum(row.accuracy);
    r["improvement_pct"] = jnum(row.improvement_pct);
    j["rows"].push_back(std::move(r));
  }
  return j;
}

ordered_json selection_report_to_json(const SelectionReport& report, bool used_fallback) {
  ordered_json j;
  j["format_version"] = 1;
  j["method"] = report.method;
  j["folds_used"] = report.folds_used;
  j["fold_seed"] = report.fold_seed;
  j["used_fallback"] = used_fallback;
  j["chosen_index"] = report.chosen_index;
  j["chosen"] = report.chosen_index < report.spec_names.size()
                    ? ordered_json(report.spec_names[report.chosen_index])
                    : ordered_json(nullptr);
  j["candidates"] = ordered_json::array();
  for (size_t i = 0; i < report.spec_names.size(); ++i) {
    ordered_json c;
    c["name"] = report.spec_names[i];
    c["mean_accuracy"] = i < report.mean_accuracy.size() ? jnum(report.mean_accuracy[i])
                                                         : ordered_json(nullptr);
    j["candidates"].push_back(std::move(c));
  }
  return j;
}

ordered_json sim_truth_to_json(const SimTruth& truth) {
  ordered_json j;
  j["format_version"] = 1;
  j["seed"] = truth.seed;
  j["class_balance"] = ordered_json::object();
  for (const auto& [name, v] : truth.class_balance) j["class_balance"][name] = v;
  j["concentration"] = ordered_json::object();
  for (const auto& [name, v] : truth.concentration) j["concentration"][name] = v;
  j["confidence_shift"] = ordered_json::object();
  for (const auto& [name, v] : truth.confidence_shift) j["confidence_shift"][name] = v;
  j["informativeness"] = ordered_json::object();
  for (const auto& [name, v] : truth.informativeness) j["informativeness"][name] = v;
  j["skills"] = ordered_json::object();
  for (const auto& [id, v] : truth.skills) j["skills"][id] = v;

  j["samples"] = ordered_json::array();
  for (const auto& [key, difficulty] : truth.difficulties) {
    ordered_json s;
    s["domain"] = key.domain_name;
    s["sample_id"] = key.sample_id;
    if (truth.corpus.truths) {
      auto it = truth.corpus.truths->find(key);
      s["truth"] = it != truth.corpus.truths->end() ? ordered_json(it->second)
                                                    : ordered_json(nullptr);
    } else {
      s["truth"] = nullptr;
    }
    s["difficulty"] = difficulty;
    j["samples"].push_back(std::move(s));
  }

  j["decisions"] = ordered_json::array();
  for (const auto& [key, dt] : truth.decisions) {
    ordered_json d;
    d["annotator_id"] = key.annotator_id;
    d["domain"] = key.domain_name;
    d["sample_id"] = key.sample_id;
    d["p_correct"] = dt.p_correct;
    d["correct"] = dt.correct;
    d["magnitude"] = dt.magnitude;
    d["mag_mean_correct"] = dt.mag_mean_correct;
    d["mag_mean_incorrect"] = dt.mag_mean_incorrect;
    j["decisions"].push_back(std::move(d));
  }
  return j;
}

// --- run configuration ------------------------------------------------------

namespace {

void check_config_keys(const json& doc, const std::vector<std::string>& known,
                       const std::string& where) {
  for (const auto& item : doc.items()) {
    bool found = false;
    for (const std::string& k : known) {
      if (item.key() == k) {
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

double config_number(const json& doc, const char* key, double fallback) {
  auto it = doc.find(key);
  if (it == doc.end()) return fallback;
  if (!it->is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
  return it->get<double>();
}

int config_int(const json& doc, const char* key, int fallback) {
  auto it = doc.find(key);
  if (it == doc.end()) return fallback;
  if (!it->is_number_integer() && !it->is_number_unsigned()) {
    throw ConfigError(std::string("config: '") + key + "' must be an integer");
  }
  return it->get<int>();
}

bool config_bool(const json& doc, const char* key, bool fallback) {
  auto it = doc.find(key);
  if (it == doc.end()) return fallback;
  if (!it->is_boolean()) throw ConfigError(std::string("config: '") + key + "' must be a boolean");
  return it->get<bool>();
}

std::string config_string(const json& doc, const char* key, const std::string& fallback) {
  auto it = doc.find(key);
  if (it == doc.end()) return fallback;
  if (!it->is_string()) throw ConfigError(std::string("config: '") + key + "' must be a string");
  return it->get<std::string>();
}

std::optional<StatTarget> target_from_json(const json& doc, const char* key,
                                           const std::string& where) {
  auto it = doc.find(key);
  if (it == doc.end()) return std::nullopt;
  if (!it->is_object()) throw ConfigError(where + ": '" + key + "' must be an object");
  check_config_keys(*it, {"value", "tolerance"}, where + "." + key);
  StatTarget target;
  target.value = config_number(*it, "value", 0.0);
  target.tolerance = config_number(*it, "tolerance", 0.0);
  return target;
}

DomainTargets domain_targets_from_json(const json& doc, const std::string& where) {
  check_config_keys(doc, {"mean_time", "mean_confidence", "time_confidence_corr"}, where);
  DomainTargets targets;
  targets.mean_time = target_from_json(doc, "mean_time", where);
  targets.mean_confidence = target_from_json(doc, "mean_confidence", where);
  targets.time_confidence_corr = target_from_json(doc, "time_confidence_corr", where);
  return targets;
}

ordered_json target_to_json(const StatTarget& target) {
  ordered_json j;
  j["value"] = target.value;
  j["tolerance"] = target.tolerance;
  return j;
}

ordered_json domain_targets_to_json(const DomainTargets& targets) {
  ordered_json j = ordered_json::object();
  if (targets.mean_time) j["mean_time"] = target_to_json(*targets.mean_time);
  if (targets.mean_confidence) j["mean_confidence"] = target_to_json(*targets.mean_confidence);
  if (targets.time_confidence_corr) {
    j["time_confidence_corr"] = target_to_json(*targets.time_confidence_corr);
  }
  return j;
}

}  // namespace

SimConfig sim_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: 'simulator' must be an object");
  check_config_keys(doc, {"domains", "targets"}, "simulator");

  SimConfig config;
  config.targets = SimTargets{};  // caller-specified targets only

  auto domains_it = doc.find("domains");
  if (domains_it == doc.end() || !domains_it->is_array()) {
    throw ConfigError("simulator: 'domains' must be an array");
  }
  for (size_t i = 0; i < domains_it->size(); ++i) {
    const json& dj = (*domains_it)[i];
    const std::string where = "simulator.domains[" + std::to_string(i) + "]";
    if (!dj.is_object()) throw ConfigError(where + " must be an object");
    check_config_keys(
        dj,
        {"name",
         "n_annotators",
         "decisions_min",
         "decisions_max",
         "task_pool_size",
         "class_balance",
         "skill_alpha",
         "skill_beta",
         "skill_floor",
         "difficulty_alpha",
         "difficulty_beta",
         "informativeness",
         "confidence_shift",
         "confidence_concentration",
         "time_log_mean",
         "time_log_sigma",
         "time_confidence_coupling",
         "fatigue",
         "riddle_correlation"},
        where);
    DomainSimConfig d;
    d.name = config_string(dj, "name", d.name);
    d.n_annotators = config_int(dj, "n_annotators", d.n_annotators);
    d.decisions_min = config_int(dj, "decisions_min", d.decisions_min);
    d.decisions_max = config_int(dj, "decisions_max", d.decisions_max);
    d.task_pool_size = config_int(dj, "task_pool_size", d.task_pool_size);
    d.class_balance = config_number(dj, "class_balance", d.class_balance);
    d.skill_alpha = config_number(dj, "skill_alpha", d.skill_alpha);
    d.skill_beta = config_number(dj, "skill_beta", d.skill_beta);
    d.skill_floor = config_number(dj, "skill_floor", d.skill_floor);
    d.difficulty_alpha = config_number(dj, "difficulty_alpha", d.difficulty_alpha);
    d.difficulty_beta = config_number(dj, "difficulty_beta", d.difficulty_beta);
    d.informativeness = config_number(dj, "informativeness", d.informativeness);
    d.confidence_shift = config_number(dj, "confidence_shift", d.confidence_shift);
    d.confidence_concentration =
        config_number(dj, "confidence_concentration", d.confidence_concentration);
    d.time_log_mean = config_number(dj, "time_log_mean", d.time_log_mean);
    d.time_log_sigma = config_number(dj, "time_log_sigma", d.time_log_sigma);
    d.time_confidence_coupling =
        config_number(dj, "time_confidence_coupling", d.time_confidence_coupling);
    d.fatigue = config_number(dj, "fatigue", d.fatigue);
    d.riddle_correlation = config_number(dj, "riddle_correlation", d.riddle_correlation);
    config.domains.push_back(std::move(d));
  }

  auto targets_it = doc.find("targets");
  if (targets_it != doc.end()) {
    if (!targets_it->is_object()) throw ConfigError("simulator: 'targets' must be an object");
    check_config_keys(*targets_it, {"overall", "per_domain", "total_decisions"},
                      "simulator.targets");
    auto overall_it = targets_it->find("overall");
    if (overall_it != targets_it->end()) {
      config.targets.overall = domain_targets_from_json(*overall_it, "simulator.targets.overall");
    }
    auto per_domain_it = targets_it->find("per_domain");
    if (per_domain_it != targets_it->end()) {
      if (!per_domain_it->is_object()) {
        throw ConfigError("simulator.targets: 'per_domain' must be an object");
      }
      for (const auto& item : per_domain_it->items()) {
        config.targets.per_domain[item.key()] =
            domain_targets_from_json(item.value(), "simulator.targets.per_domain." + item.key());
      }
    }
    config.targets.total_decisions =
        target_from_json(*targets_it, "total_decisions", "simulator.targets");
  }

  config.validate();
  return config;
}

ordered_json sim_config_to_json(const SimConfig& config) {
  ordered_json j;
  j["domains"] = ordered_json::array();
  for (const DomainSimConfig& d : config.domains) {
    ordered_json dj;
    dj["name"] = d.name;
    dj["n_annotators"] = d.n_annotators;
    dj["decisions_min"] = d.decisions_min;
    dj["decisions_max"] = d.decisions_max;
    dj["task_pool_size"] = d.task_pool_size;
    dj["class_balance"] = d.class_balance;
    dj["skill_alpha"] = d.skill_alpha;
    dj["skill_beta"] = d.skill_beta;
    dj["skill_floor"] = d.skill_floor;
    dj["difficulty_alpha"] = d.difficulty_alpha;
    dj["difficulty_beta"] = d.difficulty_beta;
    dj["informativeness"] = d.informativeness;
    dj["confidence_shift"] = d.confidence_shift;
    dj["confidence_concentration"] = d.confidence_concentration;
    dj["time_log_mean"] = d.time_log_mean;
    dj["time_log_sigma"] = d.time_log_sigma;
    dj["time_confidence_coupling"] = d.time_confidence_coupling;
    dj["fatigue"] = d.fatigue;
    dj["riddle_correlation"] = d.riddle_correlation;
    j["domains"].push_back(std::move(dj));
  }

  ordered_json targets;
  targets["overall"] = domain_targets_to_json(config.targets.overall);
  targets["per_domain"] = ordered_json::object();
  for (const auto& [name, dt] : config.targets.per_domain) {
    targets["per_domain"][name] = domain_targets_to_json(dt);
  }
  if (config.targets.total_decisions) {
    targets["total_decisions"] = target_to_json(*config.targets.total_decisions);
  }
  j["targets"] = std::move(targets);
  return j;
}

std::vector<ModelSpec> classifiers_from_json(const json& list) {
  if (!list.is_array()) throw ConfigError("config: 'classifiers' must be an array");
  std::vector<ModelSpec> specs;
  for (size_t i = 0; i < list.size(); ++i) {
    const json& cj = list[i];
    const std::string where = "classifiers[" + std::to_string(i) + "]";
    if (!cj.is_object()) throw ConfigError(where + " must be an object");
    const std::string kind = config_string(cj, "kind", "");
    if (kind.empty()) throw ConfigError(where + ": 'kind' is required");

    ModelSpec spec;
    if (kind == "knn") {
      check_config_keys(cj, {"kind", "k"}, where);
      KnnParams p;
      p.k = config_int(cj, "k", p.k);
      spec.kind = p;
    } else if (kind == "gaussian_nb") {
      check_config_keys(cj, {"kind"}, where);
      spec.kind = GaussianNbParams{};
    } else if (kind == "logistic_sgd") {
      check_config_keys(cj, {"kind", "learning_rate", "epochs", "l2"}, where);
      LogisticSgdParams p;
      p.learning_rate = config_number(cj, "learning_rate", p.learning_rate);
      p.epochs = config_int(cj, "epochs", p.epochs);
      p.l2 = config_number(cj, "l2", p.l2);
      spec.kind = p;
    } else if (kind == "decision_tree") {
      check_config_keys(cj, {"kind", "max_depth", "min_leaf"}, where);
      DecisionTreeParams p;
      p.max_depth = config_int(cj, "max_depth", p.max_depth);
      p.min_leaf = config_int(cj, "min_leaf", p.min_leaf);
      spec.kind = p;
    } else if (kind == "random_forest") {
      check_config_keys(cj, {"kind", "n_trees", "max_depth", "feature_subsample"}, where);
      RandomForestParams p;
      p.n_trees = config_int(cj, "n_trees", p.n_trees);
      p.max_depth = config_int(cj, "max_depth", p.max_depth);
      p.feature_subsample = config_number(cj, "feature_subsample", p.feature_subsample);
      spec.kind = p;
    } else if (kind == "adaboost_stumps") {
      check_config_keys(cj, {"kind", "n_rounds"}, where);
      AdaBoostStumpsParams p;
      p.n_rounds = config_int(cj, "n_rounds", p.n_rounds);
      spec.kind = p;
    } else if (kind == "constant") {
      check_config_keys(cj, {"kind", "label"}, where);
      ConstantParams p;
      p.label = config_int(cj, "label", p.label);
      spec.kind = p;
    } else {
      throw ConfigError(where + ": unknown classifier kind '" + kind + "'");
    }
    spec.validate();
    specs.push_back(std::move(spec));
  }
  return specs;
}

ordered_json classifiers_to_json(const std::vector<ModelSpec>& specs) {
  ordered_json list = ordered_json::array();
  for (const ModelSpec& spec : specs) {
    ordered_json cj;
    cj["kind"] = spec.kind_name();
    std::visit(
        [&cj](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, KnnParams>) {
            cj["k"] = p.k;
          } else if constexpr (std::is_same_v<T, LogisticSgdParams>) {
            cj["learning_rate"] = p.learning_rate;
            cj["epochs"] = p.epochs;
            cj["l2"] = p.l2;
          } else if constexpr (std::is_same_v<T, DecisionTreeParams>) {
            cj["max_depth"] = p.max_depth;
            cj["min_leaf"] = p.min_leaf;
          } else if constexpr (std::is_same_v<T, RandomForestParams>) {
            cj["n_trees"] = p.n_trees;
            cj["max_depth"] = p.max_depth;
            cj["feature_subsample"] = p.feature_subsample;
          } else if constexpr (std::is_same_v<T, AdaBoostStumpsParams>) {
            cj["n_rounds"] = p.n_rounds;
          } else if constexpr (std::is_same_v<T, ConstantParams>) {
            cj["label"] = p.label;
          }
        },
        spec.kind);
    list.push_back(std::move(cj));
  }
  return list;
}

void RunConfig::validate() const {
  if (runs < 1) throw ConfigError("config: 'runs' must be >= 1");
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw ConfigError("config: 'train_frac' must be strictly between 0 and 1");
  }
  if (cv_folds < 2) throw ConfigError("config: 'cv_folds' must be >= 2");
  if (settings.empty()) throw ConfigError("config: 'settings' must not be empty");
  if (classifiers.empty()) throw ConfigError("config: 'classifiers' must not be empty");
  for (const ModelSpec& spec : classifiers) spec.validate();
  if ((decisions_path.has_value()) != (annotators_path.has_value())) {
    throw ConfigError("config: 'inputs' needs both decisions and annotators paths");
  }
  if (truths_path && !decisions_path) {
    throw ConfigError("config: 'inputs.truths' needs a decisions path");
  }
  if (simulator) simulator->validate();
}

ExperimentOptions RunConfig::experiment_options() const {
  ExperimentOptions options;
  options.runs = runs;
  options.train_frac = train_frac;
  options.cv_folds = cv_folds;
  options.selection_mode = selection;
  options.vary_split = vary_split;
  options.vary_model_seed = vary_model_seed;
  options.specs = classifiers;
  options.base_mask = mask;
  return options;
}

RunConfig run_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  check_config_keys(doc,
                    {"format_version", "inputs", "settings", "runs", "train_frac", "cv_folds",
                     "seed", "strict", "mask", "classifiers", "vary_split", "vary_model_seed",
                     "selection", "simulator"},
                    "config");
  if (doc.contains("format_version") && config_int(doc, "format_version", 1) != 1) {
    throw ConfigError("config: unsupported format_version");
  }

  RunConfig config;

  auto inputs_it = doc.find("inputs");
  if (inputs_it != doc.end()) {
    if (!inputs_it->is_object()) throw ConfigError("config: 'inputs' must be an object");
    check_config_keys(*inputs_it, {"decisions", "annotators", "truths"}, "inputs");
    if (inputs_it->contains("decisions")) {
      config.decisions_path = config_string(*inputs_it, "decisions", "");
    }
    if (inputs_it->contains("annotators")) {
      config.annotators_path = config_string(*inputs_it, "annotators", "");
    }
    if (inputs_it->contains("truths")) {
      config.truths_path = config_string(*inputs_it, "truths", "");
    }
  }

  auto settings_it = doc.find("settings");
  if (settings_it != doc.end()) {
    if (!settings_it->is_array()) throw ConfigError("config: 'settings' must be an array");
    config.settings.clear();
    for (const json& sj : *settings_it) {
      if (!sj.is_string()) throw ConfigError("config: settings entries must be strings");
      auto setting = parse_setting(sj.get<std::string>());
      if (!setting) throw ConfigError("config: unknown setting '" + sj.get<std::string>() + "'");
      config.settings.push_back(*setting);
    }
  }

  config.runs = config_int(doc, "runs", config.runs);
  config.train_frac = config_number(doc, "train_frac", config.train_frac);
  config.cv_folds = config_int(doc, "cv_folds", config.cv_folds);
  config.strict = config_bool(doc, "strict", config.strict);
  config.vary_split = config_bool(doc, "vary_split", config.vary_split);
  config.vary_model_seed = config_bool(doc, "vary_model_seed", config.vary_model_seed);

  auto seed_it = doc.find("seed");
  if (seed_it != doc.end()) {
    if (!seed_it->is_number_unsigned() &&
        !(seed_it->is_number_integer() && seed_it->get<long long>() >= 0)) {
      throw ConfigError("config: 'seed' must be a non-negative integer");
    }
    config.seed = seed_it->get<uint64_t>();
  }

  if (doc.contains("mask")) config.mask = FeatureMask::parse(config_string(doc, "mask", ""));

  auto classifiers_it = doc.find("classifiers");
  if (classifiers_it != doc.end()) config.classifiers = classifiers_from_json(*classifiers_it);

  const std::string selection = config_string(doc, "selection", "cv");
  if (selection == "cv") {
    config.selection = SelectionMode::CrossValidation;
  } else if (selection == "train") {
    config.selection = SelectionMode::TrainAccuracy;
  } else {
    throw ConfigError("config: 'selection' must be \"cv\" or \"train\"");
  }

  auto simulator_it = doc.find("simulator");
  if (simulator_it != doc.end()) config.simulator = sim_config_from_json(*simulator_it);

  config.validate();
  return config;
}

RunConfig load_run_config(const std::string& path) {
  const std::string text = read_text_file(path);
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ParseError(path + ": invalid JSON");
  return run_config_from_json(doc);
}

ordered_json run_config_to_json(const RunConfig& config) {
  ordered_json j;
  j["format_version"] = 1;
  if (config.decisions_path || config.annotators_path || config.truths_path) {
    ordered_json inputs;
    if (config.decisions_path) inputs["decisions"] = *config.decisions_path;
    if (config.annotators_path) inputs["annotators"] = *config.annotators_path;
    if (config.truths_path) inputs["truths"] = *config.truths_path;
    j["inputs"] = std::move(inputs);
  }
  ordered_json settings = ordered_json::array();
  for (SplitSetting setting : config.settings) settings.push_back(setting_name(setting));
  j["settings"] = std::move(settings);
  j["runs"] = config.runs;
  j["train_frac"] = config.train_frac;
  j["cv_folds"] = config.cv_folds;
  if (config.seed) j["seed"] = *config.seed;
  j["strict"] = config.strict;
  j["mask"] = config.mask.to_string();
  j["classifiers"] = classifiers_to_json(config.classifiers);
  j["vary_split"] = config.vary_split;
  j["vary_model_seed"] = config.vary_model_seed;
  j["selection"] = config.selection == SelectionMode::CrossValidation ? "cv" : "train";
  if (config.simulator) j["simulator"] = sim_config_to_json(*config.simulator);
  return j;
}

// --- atomic output directory ---------------------------------------------------

OutputStage::OutputStage(const std::string& final_dir) : final_dir_(final_dir) {
  if (final_dir_.empty()) throw ConfigError("output directory must be named");
  while (final_dir_.size() > 1 && final_dir_.back() == '/') final_dir_.pop_back();

  std::error_code ec;
  if (fs::exists(final_dir_, ec)) {
    throw ConfigError("output directory already exists: " + final_dir_);
  }
  const fs::path parent = fs::path(final_dir_).parent_path();
  if (!parent.empty()) fs::create_directories(parent, ec);

  staging_dir_ = final_dir_ + ".staging-" + std::to_string(::getpid());
  fs::remove_all(staging_dir_, ec);
  if (!fs::create_directory(staging_dir_, ec) || ec) {
    throw IoError("cannot create staging directory " + staging_dir_);
  }
}

OutputStage::~OutputStage() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_dir_, ec);
  }
}

void OutputStage::write(const std::string& relative_path, const std::string& content) {
  if (committed_) throw IoError("output directory already committed");
  write_text_file(staging_dir_ + "/" + relative_path, content);
}

void OutputStage::commit() {
  if (committed_) return;
  std::error_code ec;
  fs::rename(staging_dir_, final_dir_, ec);
  if (ec) {
    throw IoError("cannot move " + staging_dir_ + " to " + final_dir_ + ": " + ec.message());
  }
  committed_ = true;
}

}  // namespace humanal
