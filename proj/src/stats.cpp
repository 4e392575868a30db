// Summary statistics over annotation corpora.

#include "humanal/stats.hpp"

#include <cmath>

#include "humanal/features.hpp"

namespace humanal {

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return kAbsent;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_variance(const std::vector<double>& values, double mean) {
  if (values.empty()) return kAbsent;
  double sum = 0.0;
  for (double v : values) sum += (v - mean) * (v - mean);
  return sum / static_cast<double>(values.size());
}

std::optional<double> pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) return std::nullopt;
  const double mx = mean_of(xs);
  const double my = mean_of(ys);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

namespace {

StatsBlock block_for(const std::vector<double>& times, const std::vector<double>& confidences) {
  StatsBlock block;
  block.count = times.size();
  if (times.empty()) return block;
  block.mean_time = mean_of(times);
  block.mean_confidence = mean_of(confidences);
  std::vector<double> smoothed;
  smoothed.reserve(confidences.size());
  for (double c : confidences) smoothed.push_back(smoothed_confidence(c));
  block.mean_smoothed_confidence = mean_of(smoothed);
  block.time_confidence_corr = pearson(times, confidences);
  return block;
}

}  // namespace

SummaryStats corpus_stats(const AnnotationCorpus& corpus) {
  std::vector<double> all_times, all_confs;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_domain;
  all_times.reserve(corpus.decisions.size());
  all_confs.reserve(corpus.decisions.size());
  for (const Decision& d : corpus.decisions) {
    all_times.push_back(d.decision_time);
    all_confs.push_back(d.confidence);
    auto& [times, confs] = per_domain[d.domain.name()];
    times.push_back(d.decision_time);
    confs.push_back(d.confidence);
  }

  SummaryStats stats;
  stats.overall = block_for(all_times, all_confs);
  for (const auto& [name, pair] : per_domain)
    stats.per_domain[name] = block_for(pair.first, pair.second);
  return stats;
}

}  // namespace humanal
