#pragma once

// Corpus summary statistics: decision counts, mean times and confidences,
// and the Pearson correlation between decision time and reported
// confidence, per domain and overall.

#include <map>
#include <optional>
#include <string>

#include "humanal/corpus.hpp"

namespace humanal {

struct StatsBlock {
  size_t count = 0;
  double mean_time = kAbsent;
  double mean_confidence = kAbsent;
  double mean_smoothed_confidence = kAbsent;
  // Undefined (and left empty) when fewer than 2 decisions or either
  // variable has zero variance.
  std::optional<double> time_confidence_corr;
};

struct SummaryStats {
  StatsBlock overall;
  std::map<std::string, StatsBlock> per_domain;
};

// Arithmetic means and two-pass Pearson correlation over raw
// (decision_time, confidence) pairs, gathered in corpus order.
SummaryStats corpus_stats(const AnnotationCorpus& corpus);

// Shared helpers, also used by feature extraction and tests.
double mean_of(const std::vector<double>& values);
// Population variance (divides by n).
double population_variance(const std::vector<double>& values, double mean);
std::optional<double> pearson(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace humanal
