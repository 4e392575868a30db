// Split construction and the evaluation experiment matrix.

#include "humanal/harness.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "humanal/errors.hpp"
#include "humanal/parallel.hpp"
#include "humanal/rng.hpp"

namespace humanal {

SettingFlags setting_flags(SplitSetting setting) {
  switch (setting) {
    case SplitSetting::V1: return {true, true, false};
    case SplitSetting::V2: return {true, false, true};
    case SplitSetting::V3: return {true, false, false};
    case SplitSetting::V4: return {false, false, false};
  }
  return {false, false, false};
}

const char* setting_name(SplitSetting setting) {
  switch (setting) {
    case SplitSetting::V1: return "V1";
    case SplitSetting::V2: return "V2";
    case SplitSetting::V3: return "V3";
    case SplitSetting::V4: return "V4";
  }
  return "?";
}

std::optional<SplitSetting> parse_setting(const std::string& name) {
  if (name == "v1" || name == "V1") return SplitSetting::V1;
  if (name == "v2" || name == "V2") return SplitSetting::V2;
  if (name == "v3" || name == "V3") return SplitSetting::V3;
  if (name == "v4" || name == "V4") return SplitSetting::V4;
  return std::nullopt;
}

namespace {

// Sub-corpus from a row predicate; decision order, annotator metadata and
// relevant truths are preserved.
template <typename Pred>
AnnotationCorpus filter_corpus(const AnnotationCorpus& corpus, Pred keep) {
  AnnotationCorpus out;
  std::set<std::string> users;
  std::set<SampleKey> samples;
  for (const Decision& d : corpus.decisions) {
    if (!keep(d)) continue;
    out.decisions.push_back(d);
    users.insert(d.annotator_id);
    samples.insert(sample_key(d));
  }
  for (const std::string& id : users) {
    auto it = corpus.annotators.find(id);
    if (it != corpus.annotators.end()) out.annotators.emplace(it->first, it->second);
  }
  if (corpus.truths) {
    TruthMap truths;
    for (const SampleKey& key : samples) {
      auto it = corpus.truths->find(key);
      if (it != corpus.truths->end()) truths.emplace(it->first, it->second);
    }
    out.truths = std::move(truths);
  }
  return out;
}

// Deterministic 70/30-style partition of sorted ids.
std::pair<std::set<std::string>, std::set<std::string>> partition_ids(
    std::vector<std::string> ids, double train_frac, Rng& rng, const std::string& what) {
  if (ids.size() < 2)
    throw InsufficientPopulationError("cannot partition " + std::to_string(ids.size()) + " " +
                                      what + " into train and test");
  rng.shuffle(ids);
  const auto n = static_cast<long>(ids.size());
  long n_train = std::lround(train_frac * static_cast<double>(n));
  n_train = std::clamp(n_train, 1L, n - 1);
  return {std::set<std::string>(ids.begin(), ids.begin() + n_train),
          std::set<std::string>(ids.begin() + n_train, ids.end())};
}

void require_decisions(const SplitResult& split, SplitSetting setting) {
  if (split.train.decisions.empty() || split.test.decisions.empty())
    throw InsufficientPopulationError(std::string("empty ") +
                                      (split.train.decisions.empty() ? "train" : "test") +
                                      " side after the " + setting_name(setting) + " split");
}

std::set<std::string> decision_users(const AnnotationCorpus& corpus) {
  std::set<std::string> users;
  for (const Decision& d : corpus.decisions) users.insert(d.annotator_id);
  return users;
}

std::set<SampleKey> decision_samples(const AnnotationCorpus& corpus) {
  std::set<SampleKey> samples;
  for (const Decision& d : corpus.decisions) samples.insert(sample_key(d));
  return samples;
}

}  // namespace

SplitResult make_split(const AnnotationCorpus& corpus, SplitSetting setting, double train_frac,
                       uint64_t seed, const std::optional<std::string>& held_out_domain) {
  if (!(train_frac > 0.0 && train_frac < 1.0))
    throw ConfigError("train_frac must be strictly between 0 and 1");
  if (corpus.decisions.empty())
    throw InsufficientPopulationError("cannot split an empty corpus");

  std::set<std::string> domains;
  for (const Decision& d : corpus.decisions) domains.insert(d.domain.name());

  if (setting == SplitSetting::V4) {
    if (domains.size() < 2)
      throw InsufficientPopulationError("the cross-domain setting needs at least 2 domains");
    if (!held_out_domain) throw ConfigError("the cross-domain setting needs a held-out domain");
    if (!domains.count(*held_out_domain))
      throw ConfigError("held-out domain '" + *held_out_domain + "' not present in the corpus");
    SplitResult split;
    split.test = filter_corpus(
        corpus, [&](const Decision& d) { return d.domain.name() == *held_out_domain; });
    // Users must not be shared either: annotators also active in the
    // held-out domain are excluded from the training side.
    const std::set<std::string> test_users = decision_users(split.test);
    split.train = filter_corpus(corpus, [&](const Decision& d) {
      return d.domain.name() != *held_out_domain && !test_users.count(d.annotator_id);
    });
    require_decisions(split, setting);
    return split;
  }

  if (domains.size() != 1)
    throw ConfigError(std::string(setting_name(setting)) +
                      " splits expect a single-domain corpus; restrict the corpus first");

  Rng rng(seed);
  SplitResult split;

  if (setting == SplitSetting::V1) {
    const std::set<std::string> user_set = decision_users(corpus);
    std::vector<std::string> users(user_set.begin(), user_set.end());
    auto [train_users, test_users] = partition_ids(std::move(users), train_frac, rng, "users");
    split.train =
        filter_corpus(corpus, [&](const Decision& d) { return train_users.count(d.annotator_id); });
    split.test =
        filter_corpus(corpus, [&](const Decision& d) { return test_users.count(d.annotator_id); });
    // Shared-sample guarantee: keep only samples answered on both sides.
    const std::set<SampleKey> train_samples = decision_samples(split.train);
    const std::set<SampleKey> test_samples = decision_samples(split.test);
    std::set<SampleKey> shared;
    for (const SampleKey& key : train_samples)
      if (test_samples.count(key)) shared.insert(key);
    split.train = filter_corpus(split.train,
                                [&](const Decision& d) { return shared.count(sample_key(d)); });
    split.test = filter_corpus(split.test,
                               [&](const Decision& d) { return shared.count(sample_key(d)); });
  } else if (setting == SplitSetting::V2) {
    std::set<SampleKey> sample_set = decision_samples(corpus);
    std::vector<std::string> sample_ids;
    for (const SampleKey& key : sample_set) sample_ids.push_back(key.sample_id);
    auto [train_s, test_s] = partition_ids(std::move(sample_ids), train_frac, rng, "samples");
    split.train =
        filter_corpus(corpus, [&](const Decision& d) { return train_s.count(d.sample_id); });
    split.test =
        filter_corpus(corpus, [&](const Decision& d) { return test_s.count(d.sample_id); });
    // Shared-user guarantee: keep only users appearing on both sides.
    const std::set<std::string> train_users = decision_users(split.train);
    const std::set<std::string> test_users = decision_users(split.test);
    std::set<std::string> shared;
    for (const std::string& id : train_users)
      if (test_users.count(id)) shared.insert(id);
    split.train = filter_corpus(split.train,
                                [&](const Decision& d) { return shared.count(d.annotator_id); });
    split.test = filter_corpus(split.test,
                               [&](const Decision& d) { return shared.count(d.annotator_id); });
  } else {  // V3: disjoint users AND disjoint samples
    const std::set<std::string> user_set = decision_users(corpus);
    std::vector<std::string> users(user_set.begin(), user_set.end());
    auto [train_users, test_users] = partition_ids(std::move(users), train_frac, rng, "users");
    std::set<SampleKey> sample_set = decision_samples(corpus);
    std::vector<std::string> sample_ids;
    for (const SampleKey& key : sample_set) sample_ids.push_back(key.sample_id);
    auto [train_s, test_s] = partition_ids(std::move(sample_ids), train_frac, rng, "samples");
    split.train = filter_corpus(corpus, [&](const Decision& d) {
      return train_users.count(d.annotator_id) && train_s.count(d.sample_id);
    });
    split.test = filter_corpus(corpus, [&](const Decision& d) {
      return test_users.count(d.annotator_id) && test_s.count(d.sample_id);
    });
  }

  require_decisions(split, setting);
  return split;
}

double accuracy(const LabelMap& predicted, const TruthMap& truths) {
  if (predicted.empty()) throw ConfigError("cannot score an empty prediction map");
  std::vector<std::string> missing;
  size_t correct = 0;
  for (const auto& [key, label] : predicted) {
    auto it = truths.find({key.domain_name, key.sample_id});
    if (it == truths.end()) {
      missing.push_back(key.domain_name + "/" + key.sample_id);
      continue;
    }
    if (label == it->second) ++correct;
  }
  if (!missing.empty()) throw MissingTruthError(missing);
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

namespace {

// Restriction of a corpus to one domain.
AnnotationCorpus domain_corpus(const AnnotationCorpus& corpus, const std::string& domain) {
  return filter_corpus(corpus, [&](const Decision& d) { return d.domain.name() == domain; });
}

std::vector<std::string> corpus_domains(const AnnotationCorpus& corpus) {
  std::set<std::string> names;
  for (const Decision& d : corpus.decisions) names.insert(d.domain.name());
  return {names.begin(), names.end()};
}

struct RowPlan {
  SplitSetting setting;
  std::string domain;
  int run;
  size_t setting_index;  // index into the caller's settings list
  size_t domain_index;
  FeatureMask mask;
  bool mask_unusable = false;  // V1 with a Majority-only base mask
};

// Evaluates one planned row; never throws.
RowResult evaluate_row(const AnnotationCorpus& corpus, const RowPlan& plan,
                       const ExperimentOptions& options, uint64_t seed) {
  RowResult row;
  row.setting = plan.setting;
  row.domain = plan.domain;
  row.run = plan.run;
  row.mask_used = plan.mask.to_string();
  row.split_seed = derive_seed(seed, 10 + plan.setting_index, plan.domain_index,
                               static_cast<uint64_t>(options.vary_split ? plan.run : 0));
  row.calib_seed = derive_seed(seed, 100 + plan.setting_index, plan.domain_index,
                               static_cast<uint64_t>(options.vary_model_seed ? plan.run : 0));
  if (plan.mask_unusable) {
    row.skipped = true;
    row.skip_reason = "ConfigError: the V1 Majority exclusion empties the feature mask";
    return row;
  }

  try {
    SplitResult split;
    if (plan.setting == SplitSetting::V4) {
      split = make_split(corpus, plan.setting, options.train_frac, row.split_seed, plan.domain);
    } else {
      const AnnotationCorpus restricted = domain_corpus(corpus, plan.domain);
      split = make_split(restricted, plan.setting, options.train_frac, row.split_seed);
    }

    const CalibrationRun run = calibrate(split.train, split.test, plan.mask, options.specs,
                                         row.calib_seed, options.cv_folds,
                                         options.selection_mode);
    row.baseline_accuracy = accuracy(baseline_labels(split.test), *split.test.truths);
    row.humanal_accuracy = accuracy(run.calibrated, *split.test.truths);
    row.model_name = run.selection.spec_names[run.selection.chosen_index];
    row.test_decisions = split.test.decisions.size();
  } catch (const Error& e) {
    row.skipped = true;
    row.skip_reason = std::string(e.type()) + ": " + e.what();
  }
  return row;
}

double mean_or_absent(const std::vector<double>& values) {
  if (values.empty()) return kAbsent;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double improvement_pct(double baseline, double humanal) {
  if (is_absent(baseline) || is_absent(humanal) || baseline <= 0.0) return kAbsent;
  return (humanal - baseline) / baseline * 100.0;
}

std::vector<RowResult> run_rows(const AnnotationCorpus& corpus, const std::vector<RowPlan>& plans,
                                const ExperimentOptions& options, uint64_t seed) {
  std::vector<RowResult> rows(plans.size());
  parallel_for(plans.size(),
               [&](size_t i) { rows[i] = evaluate_row(corpus, plans[i], options, seed); });
  return rows;
}

}  // namespace

EvalReport run_experiment(const AnnotationCorpus& corpus,
                          const std::vector<SplitSetting>& settings,
                          const ExperimentOptions& options, uint64_t seed) {
  if (!corpus.has_truths()) throw ConfigError("evaluation requires ground truth");
  if (settings.empty()) throw ConfigError("no split settings requested");
  if (options.runs < 1) throw ConfigError("runs must be >= 1");

  const std::vector<std::string> domains = corpus_domains(corpus);

  std::vector<RowPlan> plans;
  for (size_t si = 0; si < settings.size(); ++si) {
    const SplitSetting setting = settings[si];
    FeatureMask mask = options.base_mask;
    bool unusable = false;
    if (setting == SplitSetting::V1 && mask.contains(FeatureSet::Majority)) {
      // Same samples on both sides: peer statistics would leak, so the
      // Majority set is forced out.
      if (auto reduced = mask.try_without(FeatureSet::Majority)) mask = *reduced;
      else unusable = true;
    }
    for (size_t di = 0; di < domains.size(); ++di)
      for (int run = 0; run < options.runs; ++run)
        plans.push_back({setting, domains[di], run, si, di, mask, unusable});
  }

  EvalReport report;
  report.seed = seed;
  report.runs = options.runs;
  report.rows = run_rows(corpus, plans, options, seed);

  // Per (setting, domain) cells, then per-setting aggregates, both over
  // completed rows only.
  for (size_t si = 0; si < settings.size(); ++si) {
    std::vector<double> setting_base, setting_humanal;
    int setting_runs = 0;
    for (const std::string& domain : domains) {
      std::vector<double> base, humanal;
      for (const RowResult& row : report.rows) {
        if (row.setting != settings[si] || row.domain != domain || row.skipped) continue;
        base.push_back(row.baseline_accuracy);
        humanal.push_back(row.humanal_accuracy);
      }
      CellResult cell;
      cell.setting = settings[si];
      cell.domain = domain;
      cell.runs_completed = static_cast<int>(base.size());
      cell.baseline_accuracy = mean_or_absent(base);
      cell.humanal_accuracy = mean_or_absent(humanal);
      cell.improvement_pct = improvement_pct(cell.baseline_accuracy, cell.humanal_accuracy);
      report.cells.push_back(cell);
      setting_base.insert(setting_base.end(), base.begin(), base.end());
      setting_humanal.insert(setting_humanal.end(), humanal.begin(), humanal.end());
      setting_runs += cell.runs_completed;
    }
    SettingAggregate agg;
    agg.setting = settings[si];
    agg.runs_completed = setting_runs;
    agg.baseline_accuracy = mean_or_absent(setting_base);
    agg.humanal_accuracy = mean_or_absent(setting_humanal);
    agg.improvement_pct = improvement_pct(agg.baseline_accuracy, agg.humanal_accuracy);
    report.aggregates.push_back(agg);
  }
  return report;
}

AblationTable ablation(const AnnotationCorpus& corpus, SplitSetting setting, AblationMode mode,
                       const ExperimentOptions& options, uint64_t seed) {
  if (!corpus.has_truths()) throw ConfigError("ablation requires ground truth");

  const std::vector<std::string> domains = corpus_domains(corpus);
  auto plans_for_mask = [&](const FeatureMask& mask) {
    std::vector<RowPlan> plans;
    for (size_t di = 0; di < domains.size(); ++di)
      for (int run = 0; run < options.runs; ++run)
        plans.push_back({setting, domains[di], run, 0, di, mask, false});
    return plans;
  };

  AblationTable table;
  table.setting = setting;
  table.mode = mode == AblationMode::Isolate ? "isolate" : "drop";

  // Reference pass with the full base mask. Split seeds depend only on
  // (setting, domain, run), so every mask variant sees identical splits.
  std::vector<double> full_base, full_humanal;
  for (const RowResult& row : run_rows(corpus, plans_for_mask(options.base_mask), options, seed)) {
    if (row.skipped) continue;
    full_base.push_back(row.baseline_accuracy);
    full_humanal.push_back(row.humanal_accuracy);
  }
  table.baseline_accuracy = mean_or_absent(full_base);
  table.full_mask_accuracy = mean_or_absent(full_humanal);

  for (int s = 0; s < kFeatureSetCount; ++s) {
    const FeatureSet set = static_cast<FeatureSet>(s);
    AblationRow row;
    row.mode = table.mode;
    row.feature_set = feature_set_name(set);

    std::optional<FeatureMask> mask;
    if (mode == AblationMode::Isolate) mask = FeatureMask::of({set});
    else mask = options.base_mask.try_without(set);
    if (!mask) {
      table.rows.push_back(row);  // dropping the only enabled set: no run
      continue;
    }

    std::vector<double> humanal;
    for (const RowResult& r : run_rows(corpus, plans_for_mask(*mask), options, seed)) {
      if (r.skipped) continue;
      humanal.push_back(r.humanal_accuracy);
    }
    row.runs_completed = static_cast<int>(humanal.size());
    row.accuracy = mean_or_absent(humanal);
    row.improvement_pct = improvement_pct(table.baseline_accuracy, row.accuracy);
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace humanal
