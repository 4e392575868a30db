// Synthetic annotator population generator and its Bayes-optimal reference.

#include "humanal/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "humanal/errors.hpp"
#include "humanal/rng.hpp"
#include "humanal/stats.hpp"

namespace humanal {

namespace {

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

std::string padded_id(const std::string& domain, char tag, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%c%03d", domain.c_str(), tag, index);
  return buf;
}

// Probability the annotator answers this sample correctly.
double correctness_probability(double skill, double difficulty) {
  return clamp(0.5 + (skill - 0.5) * (1.0 - difficulty), 0.01, 1.0);
}

// Mean of the decisiveness-magnitude distribution under a hypothetical
// correctness outcome. A correct answer reproduces the sample's truth, an
// incorrect one flips it, which fixes which side of the scale the shift
// bias applies to.
double magnitude_mean(const DomainSimConfig& cfg, int sample_truth, bool correct_case,
                      double p_correct) {
  const int label = correct_case ? sample_truth : 1 - sample_truth;
  const double side = label == 1 ? 1.0 : -1.0;
  const double surprise = (correct_case ? 1.0 : 0.0) - p_correct;
  const double m =
      0.5 + 0.5 * cfg.confidence_shift * side + cfg.informativeness * 0.35 * surprise;
  return clamp(m, 0.03, 0.97);
}

double log_beta_pdf(double x, double alpha, double beta) {
  const double xc = clamp(x, 1e-9, 1.0 - 1e-9);
  return (alpha - 1.0) * std::log(xc) + (beta - 1.0) * std::log1p(-xc) +
         std::lgamma(alpha + beta) - std::lgamma(alpha) - std::lgamma(beta);
}

void check_range(const std::string& domain, const std::string& field, double value, double lo,
                 double hi) {
  if (!(value >= lo && value <= hi)) {
    throw ConfigError("simulator domain '" + domain + "': " + field + " must be in [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

void check_positive(const std::string& domain, const std::string& field, double value) {
  if (!(value > 0.0)) {
    throw ConfigError("simulator domain '" + domain + "': " + field + " must be > 0");
  }
}

}  // namespace

void SimConfig::validate() const {
  if (domains.empty()) throw ConfigError("simulator config needs at least one domain");
  std::vector<std::string> names;
  for (const DomainSimConfig& d : domains) {
    if (d.name.empty()) throw ConfigError("simulator domain name must be non-empty");
    if (std::find(names.begin(), names.end(), d.name) != names.end()) {
      throw ConfigError("duplicate simulator domain '" + d.name + "'");
    }
    names.push_back(d.name);
    if (d.n_annotators < 1) {
      throw ConfigError("simulator domain '" + d.name + "': n_annotators must be >= 1");
    }
    if (d.decisions_min < 1 || d.decisions_max < d.decisions_min) {
      throw ConfigError("simulator domain '" + d.name +
                        "': need 1 <= decisions_min <= decisions_max");
    }
    if (d.task_pool_size < d.decisions_max) {
      throw ConfigError("simulator domain '" + d.name +
                        "': task_pool_size must be >= decisions_max");
    }
    check_range(d.name, "class_balance", d.class_balance, 0.0, 1.0);
    check_positive(d.name, "skill_alpha", d.skill_alpha);
    check_positive(d.name, "skill_beta", d.skill_beta);
    check_range(d.name, "skill_floor", d.skill_floor, 0.0, 1.0);
    check_positive(d.name, "difficulty_alpha", d.difficulty_alpha);
    check_positive(d.name, "difficulty_beta", d.difficulty_beta);
    check_range(d.name, "informativeness", d.informativeness, 0.0, 1.0);
    check_range(d.name, "confidence_shift", d.confidence_shift, -0.9, 0.9);
    check_positive(d.name, "confidence_concentration", d.confidence_concentration);
    if (!(d.time_log_sigma >= 0.0)) {
      throw ConfigError("simulator domain '" + d.name + "': time_log_sigma must be >= 0");
    }
    check_range(d.name, "time_confidence_coupling", d.time_confidence_coupling, -0.9, 0.9);
    check_range(d.name, "fatigue", d.fatigue, 0.0, 0.9);
    check_range(d.name, "riddle_correlation", d.riddle_correlation, 0.0, 1.0);
  }
}

// Back-derives the lognormal location so the expected decision time of a
// domain equals target_mean_time after the decisiveness and fatigue
// multipliers (whose means are ~0.5 and ~0.5125 for 30-50 item sessions).
static double derived_time_log_mean(double target_mean_time, double coupling, double fatigue,
                                    double log_sigma) {
  const double scale = (1.0 + coupling * 0.5) * (1.0 + fatigue * 0.5125);
  return std::log(target_mean_time / scale) - 0.5 * log_sigma * log_sigma;
}

SimConfig default_sim_config() {
  SimConfig config;

  DomainSimConfig shape;
  shape.name = "SM";
  shape.confidence_shift = -0.08;
  shape.difficulty_alpha = 3.0;
  shape.difficulty_beta = 1.87;
  shape.time_log_mean = derived_time_log_mean(14.5, shape.time_confidence_coupling,
                                              shape.fatigue, shape.time_log_sigma);

  DomainSimConfig entity;
  entity.name = "EM";
  entity.confidence_shift = 0.40;
  entity.difficulty_alpha = 1.0;
  entity.difficulty_beta = 7.2;
  entity.time_log_mean = derived_time_log_mean(10.0, entity.time_confidence_coupling,
                                               entity.fatigue, entity.time_log_sigma);

  DomainSimConfig text;
  text.name = "TM";
  text.confidence_shift = 0.60;
  text.difficulty_alpha = 1.5;
  text.difficulty_beta = 4.72;
  text.time_log_mean = derived_time_log_mean(12.0, text.time_confidence_coupling, text.fatigue,
                                             text.time_log_sigma);

  config.domains = {shape, entity, text};

  config.targets.overall.mean_time = StatTarget{11.5, 1.0};
  config.targets.overall.mean_confidence = StatTarget{0.59, 0.03};
  config.targets.overall.time_confidence_corr = StatTarget{-0.103, 0.03};
  config.targets.per_domain["SM"].mean_time = StatTarget{14.5, 1.0};
  config.targets.per_domain["SM"].mean_confidence = StatTarget{0.48, 0.03};
  config.targets.per_domain["EM"].mean_time = StatTarget{10.0, 1.0};
  config.targets.per_domain["EM"].mean_confidence = StatTarget{0.60, 0.03};
  config.targets.per_domain["TM"].mean_time = StatTarget{12.0, 1.0};
  config.targets.per_domain["TM"].mean_confidence = StatTarget{0.65, 0.03};
  config.targets.total_decisions = StatTarget{12000.0, 2400.0};

  return config;
}

SimTruth generate_corpus(const SimConfig& config, uint64_t seed) {
  config.validate();

  SimTruth truth;
  truth.seed = seed;

  for (size_t di = 0; di < config.domains.size(); ++di) {
    const DomainSimConfig& cfg = config.domains[di];
    const Domain domain(cfg.name);
    Rng rng(derive_seed(seed, 0xD0, di));

    truth.concentration[cfg.name] = cfg.confidence_concentration;
    truth.class_balance[cfg.name] = cfg.class_balance;
    truth.confidence_shift[cfg.name] = cfg.confidence_shift;
    truth.informativeness[cfg.name] = cfg.informativeness;

    // Task pool: truth labels stratified to hit the configured balance
    // exactly (a bernoulli pool would wobble the realized balance by
    // ~0.5/sqrt(pool) per corpus, which dominates run-to-run drift of the
    // population statistics), plus a difficulty per sample.
    std::vector<int> sample_truth(cfg.task_pool_size, 0);
    const int n_positive = static_cast<int>(
        std::lround(cfg.class_balance * cfg.task_pool_size));
    std::fill_n(sample_truth.begin(), n_positive, 1);
    rng.shuffle(sample_truth);
    std::vector<double> sample_difficulty(cfg.task_pool_size);
    for (int s = 0; s < cfg.task_pool_size; ++s) {
      sample_difficulty[s] = rng.beta(cfg.difficulty_alpha, cfg.difficulty_beta);
      const SampleKey key{cfg.name, padded_id(cfg.name, 's', s)};
      if (!truth.corpus.truths) truth.corpus.truths.emplace();
      (*truth.corpus.truths)[key] = sample_truth[s];
      truth.difficulties[key] = sample_difficulty[s];
    }

    // Annotator skills and screening scores.
    std::vector<double> skill(cfg.n_annotators);
    for (int a = 0; a < cfg.n_annotators; ++a) {
      skill[a] = std::max(rng.beta(cfg.skill_alpha, cfg.skill_beta), cfg.skill_floor);
      const double mix = rng.uniform(0.3, 0.95);
      const double q =
          clamp(cfg.riddle_correlation * skill[a] + (1.0 - cfg.riddle_correlation) * mix, 0.0,
                1.0);
      int hits = 0;
      for (int r = 0; r < 10; ++r) hits += rng.bernoulli(q) ? 1 : 0;

      const std::string annotator_id = padded_id(cfg.name, 'a', a);
      truth.skills[annotator_id] = skill[a];
      AnnotatorMeta meta;
      meta.annotator_id = annotator_id;
      meta.riddle_score = hits / 10.0;
      truth.corpus.annotators[annotator_id] = meta;  // session time filled below
    }

    // Sessions: each annotator judges a random subset of the pool in a
    // random order; decision draws happen in position order.
    std::vector<int> pool(cfg.task_pool_size);
    std::iota(pool.begin(), pool.end(), 0);
    for (int a = 0; a < cfg.n_annotators; ++a) {
      const std::string annotator_id = padded_id(cfg.name, 'a', a);
      const int n_dec = rng.uniform_int(cfg.decisions_min, cfg.decisions_max);
      std::vector<int> order = pool;
      rng.shuffle(order);

      long long session_ms = 0;
      for (int k = 1; k <= n_dec; ++k) {
        const int s = order[k - 1];
        const double p = correctness_probability(skill[a], sample_difficulty[s]);
        const bool correct = rng.bernoulli(p);
        const int label = correct ? sample_truth[s] : 1 - sample_truth[s];

        const double mean_correct = magnitude_mean(cfg, sample_truth[s], true, p);
        const double mean_incorrect = magnitude_mean(cfg, sample_truth[s], false, p);
        const double m = correct ? mean_correct : mean_incorrect;
        const double kappa = cfg.confidence_concentration;
        double magnitude = rng.beta(m * kappa, (1.0 - m) * kappa);
        // Keep the no-match side strictly below 0.5 after the slider
        // resolution rounding (four decimals).
        if (label == 0) magnitude = std::max(magnitude, 2e-4);
        const double raw_conf = label == 1 ? 0.5 + 0.5 * magnitude : 0.5 - 0.5 * magnitude;
        const double confidence = std::round(raw_conf * 10000.0) / 10000.0;

        const double base_time = rng.lognormal(cfg.time_log_mean, cfg.time_log_sigma);
        const double pos_norm = static_cast<double>(k) / n_dec;
        double t = base_time * (1.0 + cfg.time_confidence_coupling * magnitude) *
                   (1.0 + cfg.fatigue * pos_norm);
        t = std::max(t, 1.0);
        const long long ms = std::llround(t * 1000.0);
        session_ms += ms;

        Decision d;
        d.annotator_id = annotator_id;
        d.domain = domain;
        d.sample_id = padded_id(cfg.name, 's', s);
        d.label = label;
        d.confidence = confidence;
        d.decision_time = static_cast<double>(ms) / 1000.0;
        d.position = k;
        truth.corpus.decisions.push_back(d);

        SimDecisionTruth dt;
        dt.p_correct = p;
        dt.correct = correct;
        dt.magnitude = magnitude;
        dt.mag_mean_correct = mean_correct;
        dt.mag_mean_incorrect = mean_incorrect;
        truth.decisions[decision_key(d)] = dt;
      }

      const long long overhead_ms = std::llround(rng.uniform(30.0, 180.0) * 1000.0);
      truth.corpus.annotators[annotator_id].total_session_time =
          static_cast<double>(session_ms + overhead_ms) / 1000.0;
    }
  }

  return truth;
}

namespace {

void add_check(TargetReport& report, const std::string& statistic,
               const std::optional<StatTarget>& target, double actual) {
  if (!target) return;
  TargetCheck check;
  check.statistic = statistic;
  check.target = target->value;
  check.tolerance = target->tolerance;
  check.actual = actual;
  check.pass = std::isfinite(actual) && std::abs(actual - target->value) <= target->tolerance;
  report.checks.push_back(check);
  report.all_pass = report.all_pass && check.pass;
}

void add_block_checks(TargetReport& report, const std::string& prefix,
                      const DomainTargets& targets, const StatsBlock* block) {
  const double mean_time = block ? block->mean_time : kAbsent;
  const double mean_conf = block ? block->mean_confidence : kAbsent;
  const double corr = block && block->time_confidence_corr ? *block->time_confidence_corr
                                                           : kAbsent;
  add_check(report, prefix + ".mean_time", targets.mean_time, mean_time);
  add_check(report, prefix + ".mean_confidence", targets.mean_confidence, mean_conf);
  add_check(report, prefix + ".time_confidence_corr", targets.time_confidence_corr, corr);
}

}  // namespace

TargetReport verify_targets(const AnnotationCorpus& corpus, const SimTargets& targets) {
  TargetReport report;
  const SummaryStats stats = corpus_stats(corpus);

  add_block_checks(report, "overall", targets.overall, &stats.overall);
  for (const auto& [domain_name, domain_targets] : targets.per_domain) {
    auto it = stats.per_domain.find(domain_name);
    const StatsBlock* block = it == stats.per_domain.end() ? nullptr : &it->second;
    add_block_checks(report, domain_name, domain_targets, block);
  }
  add_check(report, "total_decisions", targets.total_decisions,
            static_cast<double>(corpus.decisions.size()));
  return report;
}

double bayes_oracle_accuracy(const SimTruth& truth, const AnnotationCorpus& cohort) {
  if (cohort.decisions.empty()) throw ConfigError("bayes oracle needs a non-empty cohort");
  if (!truth.corpus.truths) throw MissingTruthError({"<simulated corpus carries no truths>"});

  // Group the cohort's decisions per sample; the oracle sees all of them.
  std::map<SampleKey, std::vector<const Decision*>> by_sample;
  for (const Decision& d : cohort.decisions) by_sample[sample_key(d)].push_back(&d);

  size_t correct_rows = 0;
  for (const auto& [key, rows] : by_sample) {
    auto truth_it = truth.corpus.truths->find(key);
    if (truth_it == truth.corpus.truths->end()) {
      throw MissingTruthError({key.domain_name + "/" + key.sample_id});
    }
    const int sample_truth = truth_it->second;

    auto balance_it = truth.class_balance.find(key.domain_name);
    const double balance = balance_it == truth.class_balance.end() ? 0.5 : balance_it->second;
    auto kappa_it = truth.concentration.find(key.domain_name);
    const double kappa = kappa_it == truth.concentration.end() ? 6.0 : kappa_it->second;
    auto shift_it = truth.confidence_shift.find(key.domain_name);
    const double shift = shift_it == truth.confidence_shift.end() ? 0.0 : shift_it->second;
    auto lambda_it = truth.informativeness.find(key.domain_name);
    const double lambda = lambda_it == truth.informativeness.end() ? 0.0 : lambda_it->second;

    double log_post[2] = {std::log(clamp(1.0 - balance, 1e-12, 1.0)),
                          std::log(clamp(balance, 1e-12, 1.0))};
    for (const Decision* d : rows) {
      auto dt_it = truth.decisions.find(decision_key(*d));
      if (dt_it == truth.decisions.end()) {
        throw ConfigError("bayes oracle: decision not produced by this generator: " +
                          d->annotator_id + "/" + d->domain.name() + "/" + d->sample_id);
      }
      const SimDecisionTruth& dt = dt_it->second;
      const double observed_magnitude = 2.0 * std::abs(d->confidence - 0.5);
      const double side = d->label == 1 ? 1.0 : -1.0;
      for (int h = 0; h <= 1; ++h) {
        const bool correct_under_h = d->label == h;
        const double p_label =
            clamp(correct_under_h ? dt.p_correct : 1.0 - dt.p_correct, 1e-9, 1.0 - 1e-9);
        // Magnitude mean under hypothesis h: the shift bias always follows
        // the emitted label's side; only the correctness nudge flips.
        const double m =
            clamp(0.5 + 0.5 * shift * side +
                      lambda * 0.35 * ((correct_under_h ? 1.0 : 0.0) - dt.p_correct),
                  0.03, 0.97);
        log_post[h] += std::log(p_label) +
                       log_beta_pdf(observed_magnitude, m * kappa, (1.0 - m) * kappa);
      }
    }

    const int predicted = log_post[1] >= log_post[0] ? 1 : 0;
    if (predicted == sample_truth) correct_rows += rows.size();
  }

  return static_cast<double>(correct_rows) / cohort.decisions.size();
}

double bayes_oracle_accuracy(const SimTruth& truth) {
  return bayes_oracle_accuracy(truth, truth.corpus);
}

}  // namespace humanal
