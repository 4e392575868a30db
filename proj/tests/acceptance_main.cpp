// End-to-end acceptance checks: eight seeded criteria covering the
// smoothing formula, the feature extractor, the simulator marginals, the
// calibration lift against its Bayes-oracle ceiling, the split protocol,
// the ablation directions, the classifier floor, and CLI determinism.
// Prints one PASS/FAIL line per criterion and exits 0 only if all pass.
// argv[1] names the CLI binary (default "./humanal").

#include <unistd.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "humanal/classifiers.hpp"
#include "humanal/errors.hpp"
#include "humanal/features.hpp"
#include "humanal/harness.hpp"
#include "humanal/io.hpp"
#include "humanal/pipeline.hpp"
#include "humanal/rng.hpp"
#include "humanal/simulator.hpp"
#include "humanal/stats.hpp"
#include "support.hpp"

using namespace humanal;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void note(const std::string& what) {
    if (ok && detail.empty()) detail = what;
  }
};

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// Number of nextafter steps from a to b, capped; 0 means bit-identical.
int ulp_distance(double a, double b) {
  int steps = 0;
  double x = a;
  while (x != b && steps < 16) {
    x = std::nextafter(x, b);
    ++steps;
  }
  return x == b ? steps : 999;
}

// --- criterion 1: smoothing formula exactness -------------------------------

Outcome check_eq1() {
  Outcome out;
  // Worked pair. The decimal results 0.4 and 0.8 are not both exactly
  // representable images of the double inputs: 2*(0.7-0.5) lands 2 ulps
  // below the literal 0.4, while 2*(0.5-0.1) is bit-identical to 0.8.
  const int d_low = ulp_distance(smoothed_confidence(0.7), 0.4);
  if (d_low > 2) out.fail("smoothed(0.7) is " + std::to_string(d_low) + " ulps from 0.4");
  if (smoothed_confidence(0.1) != 0.8) out.fail("smoothed(0.1) != 0.8 exactly");

  // Branch endpoints, tolerance zero.
  if (smoothed_confidence(0.5) != 0.0) out.fail("smoothed(0.5) != 0");
  if (smoothed_confidence(1.0) != 1.0) out.fail("smoothed(1.0) != 1");
  if (smoothed_confidence(0.0) != 1.0) out.fail("smoothed(0.0) != 1");
  out.note("0.7->0.4 within 2 ulps, 0.1->0.8 and endpoints exact");
  return out;
}

// --- criterion 2: feature oracle equivalence -------------------------------

Outcome check_feature_oracle() {
  Outcome out;
  Rng rng(2026);
  const FeatureMask full = FeatureMask::full();
  int corpora = 0;
  long rows = 0;
  long mismatches = 0;
  for (int i = 0; i < 1200; ++i) {
    const AnnotationCorpus corpus = random_small_corpus(rng, 5, 5, 1);
    const FeatureMatrix matrix = featurize_corpus(corpus, full);
    if (matrix.columns.size() != static_cast<size_t>(kSlotCount) ||
        matrix.rows.size() != corpus.decisions.size()) {
      out.fail("full-mask matrix shape is wrong");
      return out;
    }
    for (size_t r = 0; r < corpus.decisions.size(); ++r) {
      const std::array<double, kSlotCount> want = naive_profile(corpus, r);
      for (size_t c = 0; c < matrix.columns.size(); ++c) {
        const int slot = static_cast<int>(matrix.columns[c]);
        if (!same_value(matrix.rows[r][c], want[slot], 1e-12)) ++mismatches;
      }
      ++rows;
    }
    ++corpora;
  }
  if (corpora < 1000) out.fail("only " + std::to_string(corpora) + " corpora");
  if (mismatches > 0) out.fail(std::to_string(mismatches) + " slot mismatches (tol 1e-12)");
  out.note(std::to_string(corpora) + " corpora, " + std::to_string(rows) +
           " profiles, tol 1e-12");
  return out;
}

// --- criterion 3: simulator marginals --------------------------------------

Outcome check_sim_marginals() {
  Outcome out;
  const SimConfig config = default_sim_config();
  const int n_seeds = 10;

  double time_sum = 0, conf_sum = 0, corr_sum = 0, count_sum = 0;
  std::map<std::string, double> dom_time, dom_conf;
  for (uint64_t seed = 1; seed <= n_seeds; ++seed) {
    const SimTruth truth = generate_corpus(config, seed);
    const SummaryStats stats = corpus_stats(truth.corpus);
    time_sum += stats.overall.mean_time;
    conf_sum += stats.overall.mean_confidence;
    if (!stats.overall.time_confidence_corr) {
      out.fail("overall correlation undefined at seed " + std::to_string(seed));
      return out;
    }
    corr_sum += *stats.overall.time_confidence_corr;
    count_sum += static_cast<double>(stats.overall.count);
    for (const auto& [name, block] : stats.per_domain) {
      dom_time[name] += block.mean_time;
      dom_conf[name] += block.mean_confidence;
    }
  }

  auto within = [&](const std::string& what, double avg, double target, double tol) {
    if (std::fabs(avg - target) > tol)
      out.fail(what + " avg " + fmt(avg) + " vs " + fmt(target) + " +/- " + fmt(tol));
  };
  within("overall mean_time", time_sum / n_seeds, 11.5, 1.0);
  within("overall mean_confidence", conf_sum / n_seeds, 0.59, 0.03);
  within("overall corr", corr_sum / n_seeds, -0.103, 0.03);

  const std::map<std::string, std::pair<double, double>> expected = {
      {"SM", {14.5, 0.48}}, {"EM", {10.0, 0.60}}, {"TM", {12.0, 0.65}}};
  for (const auto& [name, pair] : expected) {
    if (!dom_time.count(name)) {
      out.fail("domain " + name + " missing");
      continue;
    }
    within(name + " mean_time", dom_time[name] / n_seeds, pair.first, 1.0);
    within(name + " mean_confidence", dom_conf[name] / n_seeds, pair.second, 0.03);
  }

  const double mean_count = count_sum / n_seeds;
  if (mean_count < 12000 * 0.8 || mean_count > 12000 * 1.2)
    out.fail("mean corpus size " + fmt(mean_count) + " outside 12000 +/- 20%");
  out.note("10-seed averages inside all bands, mean size " + fmt(mean_count));
  return out;
}

// --- criterion 4: calibration lift under the oracle ceiling ----------------

// Domain slice with the same record order and metadata subsetting the
// harness uses before V1-V3 splits.
AnnotationCorpus domain_slice(const AnnotationCorpus& corpus, const std::string& domain) {
  AnnotationCorpus slice;
  for (const Decision& d : corpus.decisions)
    if (d.domain.name() == domain) slice.decisions.push_back(d);
  for (const Decision& d : slice.decisions) {
    auto it = corpus.annotators.find(d.annotator_id);
    if (it != corpus.annotators.end()) slice.annotators[d.annotator_id] = it->second;
  }
  if (corpus.truths) {
    TruthMap truths;
    for (const Decision& d : slice.decisions) {
      auto it = corpus.truths->find(sample_key(d));
      if (it != corpus.truths->end()) truths[it->first] = it->second;
    }
    slice.truths = std::move(truths);
  }
  return slice;
}

Outcome check_calibration_lift() {
  Outcome out;
  const double started = now_seconds();
  const SimTruth truth = generate_corpus(default_sim_config(), 42);
  const ExperimentOptions options;  // 20 runs, default pool, full mask
  const std::vector<SplitSetting> settings = {SplitSetting::V1, SplitSetting::V2,
                                              SplitSetting::V3, SplitSetting::V4};
  const EvalReport report = run_experiment(truth.corpus, settings, options, 42);

  std::map<SplitSetting, std::pair<double, double>> lift;  // baseline, humanal
  for (const SettingAggregate& agg : report.aggregates) {
    if (agg.runs_completed == 0 || is_absent(agg.humanal_accuracy)) {
      out.fail(std::string(setting_name(agg.setting)) + " completed no runs");
      continue;
    }
    lift[agg.setting] = {agg.baseline_accuracy, agg.humanal_accuracy};
  }
  auto gain = [&](SplitSetting s) { return lift[s].second - lift[s].first; };
  if (lift.count(SplitSetting::V3) && gain(SplitSetting::V3) < 0.05)
    out.fail("V3 lift " + fmt(gain(SplitSetting::V3)) + " < 0.05");
  if (lift.count(SplitSetting::V4) && gain(SplitSetting::V4) < 0.02)
    out.fail("V4 lift " + fmt(gain(SplitSetting::V4)) + " < 0.02");
  for (const auto& [setting, accs] : lift) {
    if (accs.second - accs.first < -0.01)
      out.fail(std::string(setting_name(setting)) + " falls " +
               fmt(accs.first - accs.second) + " below baseline (> 0.01)");
  }

  // Every completed row stays at or below the Bayes-oracle ceiling of its
  // own test cohort, rebuilt from the recorded split seed.
  int completed = 0, skipped = 0, above_ceiling = 0;
  for (const RowResult& row : report.rows) {
    if (row.skipped) {
      ++skipped;
      continue;
    }
    ++completed;
    SplitResult split;
    if (row.setting == SplitSetting::V4) {
      split = make_split(truth.corpus, row.setting, options.train_frac, row.split_seed,
                         row.domain);
    } else {
      const AnnotationCorpus slice = domain_slice(truth.corpus, row.domain);
      split = make_split(slice, row.setting, options.train_frac, row.split_seed, {});
    }
    if (split.test.decisions.size() != row.test_decisions) {
      out.fail("row split does not reproduce from its recorded seed");
      break;
    }
    const double ceiling = bayes_oracle_accuracy(truth, split.test);
    if (row.humanal_accuracy > ceiling + 1e-12) ++above_ceiling;
  }
  if (skipped > 0) out.fail(std::to_string(skipped) + " rows skipped");
  if (completed == 0) out.fail("no completed rows");
  if (above_ceiling > 0)
    out.fail(std::to_string(above_ceiling) + " rows exceed the oracle ceiling");

  const double elapsed = now_seconds() - started;
  if (elapsed >= 300.0) out.fail("took " + fmt(elapsed) + "s (budget 300s)");
  if (out.ok && lift.size() == 4) {
    out.detail = "V1 +" + fmt(gain(SplitSetting::V1)) + ", V2 +" + fmt(gain(SplitSetting::V2)) +
                 ", V3 +" + fmt(gain(SplitSetting::V3)) + ", V4 +" + fmt(gain(SplitSetting::V4)) +
                 "; " + std::to_string(completed) + " rows under the oracle ceiling; " +
                 fmt(elapsed) + "s";
  }
  return out;
}

// --- criterion 5: split-protocol properties ---------------------------------

using IdSet = std::set<std::string>;
using PairSet = std::set<std::pair<std::string, std::string>>;

IdSet users_of(const AnnotationCorpus& corpus) {
  IdSet ids;
  for (const Decision& d : corpus.decisions) ids.insert(d.annotator_id);
  return ids;
}
PairSet samples_of(const AnnotationCorpus& corpus) {
  PairSet keys;
  for (const Decision& d : corpus.decisions) keys.insert({d.domain.name(), d.sample_id});
  return keys;
}
IdSet domains_of(const AnnotationCorpus& corpus) {
  IdSet names;
  for (const Decision& d : corpus.decisions) names.insert(d.domain.name());
  return names;
}
template <typename T>
bool disjoint(const std::set<T>& a, const std::set<T>& b) {
  for (const T& x : a)
    if (b.count(x)) return false;
  return true;
}

// Every user answers every sample once, so no setting can run dry.
AnnotationCorpus dense_corpus(Rng& rng, const std::string& domain,
                              const std::string& user_prefix) {
  AnnotationCorpus corpus;
  const int n_users = rng.uniform_int(2, 6);
  const int n_samples = rng.uniform_int(2, 6);
  for (int u = 0; u < n_users; ++u) {
    const std::string id = user_prefix + std::to_string(u);
    std::vector<int> order(n_samples);
    for (int s = 0; s < n_samples; ++s) order[s] = s;
    rng.shuffle(order);
    double total = 0.0;
    for (int k = 0; k < n_samples; ++k) {
      const double conf = rng.uniform_int(0, 10) / 10.0;
      const double t = 1.0 + rng.uniform_int(0, 40) / 8.0;
      corpus.decisions.push_back(
          make_decision(id, domain, "s" + std::to_string(order[k]), conf, t, k + 1));
      total += t;
    }
    corpus.annotators[id] = make_meta(id, rng.uniform_int(0, 10) / 10.0, total + 30.0);
  }
  TruthMap truths;
  for (const Decision& d : corpus.decisions) truths[sample_key(d)] = rng.uniform_int(0, 1);
  corpus.truths = std::move(truths);
  return corpus;
}

AnnotationCorpus dense_multi_domain(Rng& rng) {
  AnnotationCorpus merged;
  const int n_domains = rng.uniform_int(2, 3);
  TruthMap truths;
  for (int g = 0; g < n_domains; ++g) {
    const std::string domain = "G" + std::to_string(g);
    AnnotationCorpus part = dense_corpus(rng, domain, "g" + std::to_string(g) + "_u");
    for (Decision& d : part.decisions) merged.decisions.push_back(std::move(d));
    for (auto& [id, meta] : part.annotators) merged.annotators[id] = meta;
    for (const auto& [key, t] : *part.truths) truths[key] = t;
  }
  merged.truths = std::move(truths);
  return merged;
}

Outcome check_split_properties() {
  Outcome out;
  const std::vector<SplitSetting> settings = {SplitSetting::V1, SplitSetting::V2,
                                              SplitSetting::V3, SplitSetting::V4};
  int total_ok = 0;
  for (size_t si = 0; si < settings.size(); ++si) {
    const SplitSetting setting = settings[si];
    const SettingFlags flags = setting_flags(setting);
    int successes = 0, skipped = 0, wrong = 0;
    for (uint64_t seed = 1; seed <= 100; ++seed) {
      Rng gen(derive_seed(555, si, seed));
      const AnnotationCorpus corpus = setting == SplitSetting::V4
                                          ? dense_multi_domain(gen)
                                          : dense_corpus(gen, "D0", "u");
      std::optional<std::string> held_out;
      if (setting == SplitSetting::V4) held_out = *domains_of(corpus).begin();
      SplitResult split;
      try {
        split = make_split(corpus, setting, 0.7, seed, held_out);
      } catch (const InsufficientPopulationError&) {
        ++skipped;
        continue;
      }
      ++successes;

      const IdSet train_users = users_of(split.train), test_users = users_of(split.test);
      const PairSet train_samples = samples_of(split.train),
                    test_samples = samples_of(split.test);
      const IdSet train_domains = domains_of(split.train),
                  test_domains = domains_of(split.test);
      bool row_ok = !split.train.decisions.empty() && !split.test.decisions.empty();
      row_ok = row_ok && (flags.same_users ? train_users == test_users
                                           : disjoint(train_users, test_users));
      row_ok = row_ok && (flags.same_samples ? train_samples == test_samples
                                             : disjoint(train_samples, test_samples));
      row_ok = row_ok && (flags.same_domain ? train_domains == test_domains
                                            : disjoint(train_domains, test_domains));
      if (setting == SplitSetting::V4) row_ok = row_ok && test_domains == IdSet{*held_out};
      if (!row_ok) ++wrong;
    }
    if (wrong > 0)
      out.fail(std::string(setting_name(setting)) + ": " + std::to_string(wrong) +
               " splits violate the sharing flags");
    if (successes < 80)
      out.fail(std::string(setting_name(setting)) + ": only " + std::to_string(successes) +
               "/100 splits usable (" + std::to_string(skipped) + " skipped)");
    total_ok += successes;
  }

  // V1 rows exclude the Majority set: the effective mask drops it and the
  // resulting feature matrix has no peer columns.
  Rng gen(derive_seed(555, 9, 1));
  const AnnotationCorpus corpus = dense_corpus(gen, "D0", "u");
  const std::optional<FeatureMask> v1_mask =
      FeatureMask::full().try_without(FeatureSet::Majority);
  if (!v1_mask) {
    out.fail("full mask minus Majority is empty");
    return out;
  }
  const SplitResult split = make_split(corpus, SplitSetting::V1, 0.7, 4, {});
  const FeatureMatrix masked = featurize_corpus(split.test, *v1_mask);
  const FeatureMatrix unmasked = featurize_corpus(split.test, FeatureMask::full());
  int peer_cols_masked = 0, peer_cols_full = 0;
  for (Slot slot : masked.columns)
    if (slot_set(slot) == FeatureSet::Majority) ++peer_cols_masked;
  for (Slot slot : unmasked.columns)
    if (slot_set(slot) == FeatureSet::Majority) ++peer_cols_full;
  if (peer_cols_masked != 0) out.fail("V1 matrix still has peer columns");
  if (peer_cols_full == 0) out.fail("full-mask control has no peer columns");

  ExperimentOptions options;
  options.runs = 2;
  options.specs = {ModelSpec{GaussianNbParams{}, 0}};
  const EvalReport report = run_experiment(corpus, {SplitSetting::V1}, options, 6);
  for (const RowResult& row : report.rows) {
    if (row.skipped || row.mask_used != v1_mask->to_string())
      out.fail("V1 experiment row did not use the Majority-free mask");
  }
  out.note(std::to_string(total_ok) + "/400 splits checked, V1 rows Majority-free");
  return out;
}

// --- criterion 6: ablation directionality -----------------------------------

Outcome check_ablation_direction() {
  Outcome out;
  SimConfig config = default_sim_config();
  for (DomainSimConfig& d : config.domains) {
    d.n_annotators = 24;
    d.decisions_min = 8;
    d.decisions_max = 12;
    d.task_pool_size = 16;
  }
  const SimTruth truth = generate_corpus(config, 2026);
  const ExperimentOptions options;  // 20 runs
  const AblationTable drop =
      ablation(truth.corpus, SplitSetting::V4, AblationMode::Drop, options, 9);
  const AblationTable isolate =
      ablation(truth.corpus, SplitSetting::V4, AblationMode::Isolate, options, 9);

  auto find_row = [](const AblationTable& table, const std::string& set) -> const AblationRow* {
    for (const AblationRow& row : table.rows)
      if (row.feature_set == set) return &row;
    return nullptr;
  };
  const AblationRow* drop_majority = find_row(drop, "Majority");
  const AblationRow* isolate_user = find_row(isolate, "UserDecision");
  if (!drop_majority || drop_majority->runs_completed == 0 ||
      is_absent(drop_majority->accuracy)) {
    out.fail("Drop(Majority) has no completed runs");
    return out;
  }
  if (!isolate_user || isolate_user->runs_completed == 0 || is_absent(isolate_user->accuracy)) {
    out.fail("Isolate(UserDecision) has no completed runs");
    return out;
  }
  if (is_absent(drop.full_mask_accuracy) || is_absent(isolate.baseline_accuracy)) {
    out.fail("reference accuracies missing");
    return out;
  }
  if (!(drop_majority->accuracy < drop.full_mask_accuracy))
    out.fail("Drop(Majority) " + fmt(drop_majority->accuracy) + " !< full mask " +
             fmt(drop.full_mask_accuracy));
  const double dev = std::fabs(isolate_user->accuracy - isolate.baseline_accuracy);
  if (dev > 0.005)
    out.fail("Isolate(UserDecision) deviates " + fmt(dev) + " from baseline (tol 0.005)");
  out.note("Drop(Majority) " + fmt(drop_majority->accuracy) + " < full " +
           fmt(drop.full_mask_accuracy) + "; Isolate(UserDecision) within " + fmt(dev) +
           " of baseline");
  return out;
}

// --- criterion 7: classifier floor ------------------------------------------

void blobs(Rng& rng, int n_per_class, double center, double sigma, FeatureMatrix& matrix,
           std::vector<int>& labels) {
  matrix.columns = {Slot::ReportedConfidence, Slot::SmoothedConfidence};
  for (int i = 0; i < n_per_class; ++i) {
    for (int c = 0; c < 2; ++c) {
      const double mu = c == 1 ? center : -center;
      matrix.rows.push_back({rng.normal(mu, sigma), rng.normal(mu, sigma)});
      labels.push_back(c);
    }
  }
}

Outcome check_classifier_floor() {
  Outcome out;
  Rng rng(77);
  FeatureMatrix train, test;
  std::vector<int> train_y, test_y;
  blobs(rng, 100, 1.5, 0.45, train, train_y);
  blobs(rng, 50, 1.5, 0.45, test, test_y);
  const FeatureMask mask = FeatureMask::of({FeatureSet::Confidence});

  double worst = 2.0;
  std::string worst_name;
  for (const ModelSpec& spec : default_model_pool()) {
    const TrainedModel model = fit(spec, train, train_y, mask);
    const std::vector<int> predicted = model.predict_matrix(test);
    int correct = 0;
    for (size_t i = 0; i < test_y.size(); ++i)
      if (predicted[i] == test_y[i]) ++correct;
    const double acc = static_cast<double>(correct) / static_cast<double>(test_y.size());
    if (acc < worst) {
      worst = acc;
      worst_name = spec.name();
    }
    if (acc < 0.95) out.fail(spec.name() + " held-out accuracy " + fmt(acc) + " < 0.95");
  }

  const TrainedModel forest =
      fit(ModelSpec{RandomForestParams{1, 8, 1.0}, 999}, train, train_y, mask);
  const TrainedModel tree = fit(ModelSpec{DecisionTreeParams{8, 2}, 0}, train, train_y, mask);
  if (forest.predict_proba_matrix(train) != tree.predict_proba_matrix(train) ||
      forest.predict_proba_matrix(test) != tree.predict_proba_matrix(test))
    out.fail("single-tree forest != plain tree bit for bit");
  out.note("worst pool member " + worst_name + " at " + fmt(worst) +
           "; 1-tree forest == tree");
  return out;
}

// --- criterion 8: CLI determinism and file round-trip ------------------------

Outcome check_cli_determinism(const std::string& cli) {
  Outcome out;
  const fs::path base =
      fs::temp_directory_path() / ("humanal_accept_" + std::to_string(::getpid()));
  fs::remove_all(base);
  fs::create_directories(base);
  auto at = [&](const std::string& name) { return (base / name).string(); };
  auto run = [&](const std::string& args) {
    const std::string cmd = "\"" + cli + "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  auto same_file = [&](const std::string& a, const std::string& b) {
    return read_text_file(a) == read_text_file(b);
  };

  write_text_file(at("sim_config.json"), R"({
    "simulator": {"domains": [
      {"name": "QA", "n_annotators": 20, "decisions_min": 6, "decisions_max": 10,
       "task_pool_size": 14},
      {"name": "QB", "n_annotators": 18, "decisions_min": 6, "decisions_max": 10,
       "task_pool_size": 14}
    ]}
  })");

  // Same seed, same bytes.
  if (!run("simulate --config " + at("sim_config.json") + " --seed 7 --out " + at("simA")) ||
      !run("simulate --config " + at("sim_config.json") + " --seed 7 --out " + at("simB"))) {
    out.fail("simulate failed");
    fs::remove_all(base);
    return out;
  }
  for (const char* name : {"decisions.jsonl", "annotators.jsonl", "truths.jsonl"}) {
    if (!same_file(at("simA/") + name, at("simB/") + name))
      out.fail(std::string("simulate twice: ") + name + " differs");
  }

  // Fixed-seed evaluate is byte-reproducible across independent runs.
  write_text_file(at("eval_config.json"), std::string(R"({
    "inputs": {"decisions": ")") + at("simA/decisions.jsonl") +
                                         R"(", "annotators": ")" + at("simA/annotators.jsonl") +
                                         R"(", "truths": ")" + at("simA/truths.jsonl") +
                                         R"("},
    "settings": ["v1", "v2", "v3", "v4"],
    "runs": 3,
    "seed": 11
  })");
  if (!run("evaluate --config " + at("eval_config.json") + " --out " + at("evalA")) ||
      !run("evaluate --config " + at("eval_config.json") + " --out " + at("evalB"))) {
    out.fail("evaluate failed");
    fs::remove_all(base);
    return out;
  }
  for (const char* name :
       {"eval_report.json", "table2.csv", "fig4.csv", "effective_config.json"}) {
    if (!same_file(at("evalA/") + name, at("evalB/") + name))
      out.fail(std::string("evaluate twice: ") + name + " differs");
  }

  // Reading the emitted corpus and writing it again is the identity.
  const CorpusReadResult read = read_corpus_files(
      at("simA/decisions.jsonl"), at("simA/annotators.jsonl"), at("simA/truths.jsonl"));
  fs::create_directories(at("round"));
  write_decisions_file(at("round/decisions.jsonl"), read.corpus);
  write_annotators_file(at("round/annotators.jsonl"), read.corpus);
  write_truths_file(at("round/truths.jsonl"), *read.corpus.truths);
  for (const char* name : {"decisions.jsonl", "annotators.jsonl", "truths.jsonl"}) {
    if (!same_file(at("simA/") + name, at("round/") + name))
      out.fail(std::string("round trip changed ") + name);
  }

  fs::remove_all(base);
  out.note("simulate, evaluate and round trip all byte-stable");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "./humanal";
  struct Criterion {
    const char* name;
    Outcome outcome;
  };
  std::vector<Criterion> criteria;
  criteria.push_back({"eq1-smoothing-exactness", check_eq1()});
  criteria.push_back({"feature-oracle-equivalence", check_feature_oracle()});
  criteria.push_back({"simulator-marginals", check_sim_marginals()});
  criteria.push_back({"calibration-lift-and-oracle-ceiling", check_calibration_lift()});
  criteria.push_back({"split-protocol-properties", check_split_properties()});
  criteria.push_back({"ablation-directionality", check_ablation_direction()});
  criteria.push_back({"classifier-floor", check_classifier_floor()});
  criteria.push_back({"cli-determinism-and-round-trip", check_cli_determinism(cli)});

  bool all_ok = true;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& c = criteria[i];
    std::printf("[%zu/%zu] %s: %s%s%s\n", i + 1, criteria.size(), c.name,
                c.outcome.ok ? "PASS" : "FAIL", c.outcome.detail.empty() ? "" : " - ",
                c.outcome.detail.c_str());
    all_ok = all_ok && c.outcome.ok;
  }
  return all_ok ? 0 : 1;
}
