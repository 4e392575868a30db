#pragma once

// Synthetic annotator populations. The generative model is built to
// reproduce published marginal statistics (mean decision times, mean
// confidences, the negative time-confidence correlation) while exposing
// every knob, and it keeps the drawn parameters so a Bayes-optimal
// reference labeler can be computed as an accuracy ceiling.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "humanal/corpus.hpp"

namespace humanal {

// Targets are optional; verify_targets checks only what is present.
struct StatTarget {
  double value = 0.0;
  double tolerance = 0.0;
};

struct DomainTargets {
  std::optional<StatTarget> mean_time;
  std::optional<StatTarget> mean_confidence;
  std::optional<StatTarget> time_confidence_corr;
};

struct SimTargets {
  DomainTargets overall;
  std::map<std::string, DomainTargets> per_domain;
  std::optional<StatTarget> total_decisions;
};

struct DomainSimConfig {
  std::string name = "SM";
  int n_annotators = 100;
  int decisions_min = 30;
  int decisions_max = 50;
  int task_pool_size = 60;
  double class_balance = 0.5;  // P(truth = 1)

  // Annotator ability and task hardness. Correctness probability is
  // 0.5 + (skill - 0.5) * (1 - difficulty), clamped to [0.01, 1].
  double skill_alpha = 8.7;
  double skill_beta = 1.3;
  double skill_floor = 0.0;  // screening knob: drawn skills are clamped up
  double difficulty_alpha = 3.0;
  double difficulty_beta = 1.87;

  // Reported confidence: the decisiveness magnitude is Beta-distributed
  // around 0.5 + confidence_shift/2 on the match side (minus on the
  // no-match side), nudged by informativeness * 0.35 * (correct - p) so
  // that confidence tracks correctness.
  double informativeness = 0.5;        // in [0, 1]
  double confidence_shift = -0.08;     // per-domain match-side bias
  double confidence_concentration = 6.0;

  // Decision time: lognormal(time_log_mean, time_log_sigma) scaled by
  // (1 + coupling * magnitude) and (1 + fatigue * position_norm), floored
  // at one second. Negative coupling makes decisive answers faster.
  double time_log_mean = 2.5;
  double time_log_sigma = 0.45;
  double time_confidence_coupling = -0.18;  // in [-1, 0]
  double fatigue = 0.25;

  // Riddle screening score: 10 riddles at a success rate blending the
  // annotator's skill (weight rho) with an independent uniform draw.
  double riddle_correlation = 0.6;
};

struct SimConfig {
  std::vector<DomainSimConfig> domains;
  SimTargets targets;

  void validate() const;  // throws ConfigError
};

// Three-domain default whose marginals land on the published values.
SimConfig default_sim_config();

// Per-decision generator facts needed by the oracle: the true correctness
// probability and the magnitude-distribution means under both hypotheses.
struct SimDecisionTruth {
  double p_correct = 0.5;
  bool correct = true;
  double magnitude = 0.0;
  double mag_mean_correct = 0.5;    // magnitude mean had the answer been correct
  double mag_mean_incorrect = 0.5;  // ... had it been incorrect
};

// Everything the generator drew, alongside the emitted corpus.
struct SimTruth {
  uint64_t seed = 0;
  AnnotationCorpus corpus;  // carries truths
  std::map<std::string, double> skills;
  std::map<SampleKey, double> difficulties;
  std::map<DecisionKey, SimDecisionTruth> decisions;
  // Per-domain generator knobs the oracle's likelihoods depend on.
  std::map<std::string, double> concentration;      // Beta concentration
  std::map<std::string, double> class_balance;      // P(truth = 1)
  std::map<std::string, double> confidence_shift;   // match-side magnitude bias
  std::map<std::string, double> informativeness;    // correctness coupling
};

// Deterministic given (config, seed); the emitted corpus always validates.
SimTruth generate_corpus(const SimConfig& config, uint64_t seed);

struct TargetCheck {
  std::string statistic;
  double target = 0.0;
  double tolerance = 0.0;
  double actual = 0.0;
  bool pass = false;
};

struct TargetReport {
  std::vector<TargetCheck> checks;
  bool all_pass = true;
};

// Recomputes corpus statistics and compares them with the target block.
TargetReport verify_targets(const AnnotationCorpus& corpus, const SimTargets& targets);

// Accuracy of the Bayes-optimal labeler that sees every decision in the
// cohort plus the generator's true parameters: per sample it combines the
// label likelihoods and magnitude densities of all cohort decisions on
// that sample into a posterior over the truth. This bounds any feature-
// based calibrator evaluated on the same cohort.
double bayes_oracle_accuracy(const SimTruth& truth, const AnnotationCorpus& cohort);
double bayes_oracle_accuracy(const SimTruth& truth);  // over the full corpus

}  // namespace humanal
