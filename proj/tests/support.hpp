#pragma once

// Shared helpers for the test binaries: hand-built corpus pieces, a
// generator of small valid corpora, and an index-free recomputation of the
// behavioral profile used as an independent cross-check.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "humanal/corpus.hpp"
#include "humanal/features.hpp"
#include "humanal/rng.hpp"

namespace testsupport {

using namespace humanal;

inline Decision make_decision(const std::string& annotator, const std::string& domain,
                              const std::string& sample, double confidence, double time_s,
                              int position) {
  Decision d;
  d.annotator_id = annotator;
  d.domain = Domain(domain);
  d.sample_id = sample;
  d.confidence = confidence;
  d.label = confidence >= 0.5 ? 1 : 0;
  d.decision_time = time_s;
  d.position = position;
  return d;
}

inline AnnotatorMeta make_meta(const std::string& id, double riddle, double total_time) {
  AnnotatorMeta meta;
  meta.annotator_id = id;
  meta.riddle_score = riddle;
  meta.total_session_time = total_time;
  return meta;
}

// Small valid corpus: 1..max_annotators annotators, sessions over a pool of
// max_samples sample ids per domain with contiguous positions, truths for
// every annotated sample. Confidences land on a coarse grid and times
// repeat a common value often, so peer ties and zero-variance reference
// sets actually occur.
inline AnnotationCorpus random_small_corpus(Rng& rng, int max_annotators = 5, int max_samples = 5,
                                            int n_domains = 1, bool with_truths = true) {
  AnnotationCorpus corpus;
  const int n_annotators = rng.uniform_int(1, max_annotators);
  std::vector<std::string> domains;
  for (int g = 0; g < n_domains; ++g) domains.push_back("D" + std::to_string(g));

  for (int a = 0; a < n_annotators; ++a) {
    const std::string id = "a" + std::to_string(a);
    double time_sum = 0.0;
    for (const std::string& domain : domains) {
      const int n_samples = rng.uniform_int(1, max_samples);
      std::vector<int> pool(max_samples);
      for (int s = 0; s < max_samples; ++s) pool[s] = s;
      rng.shuffle(pool);
      for (int k = 0; k < n_samples; ++k) {
        const double conf = rng.uniform_int(0, 10) / 10.0;
        const double t = rng.uniform_int(0, 1) == 0 ? 2.0 : 1.0 + rng.uniform_int(1, 80) / 8.0;
        Decision d = make_decision(id, domain, "s" + std::to_string(pool[k]), conf, t, k + 1);
        time_sum += d.decision_time;
        corpus.decisions.push_back(std::move(d));
      }
    }
    corpus.annotators[id] = make_meta(id, rng.uniform_int(0, 10) / 10.0, time_sum + 30.0);
  }

  if (with_truths) {
    TruthMap truths;
    for (const Decision& d : corpus.decisions) truths[sample_key(d)] = rng.uniform_int(0, 1);
    corpus.truths = std::move(truths);
  }
  return corpus;
}

inline double naive_smoothed(double c) {
  return c >= 0.5 ? 2.0 * (c - 0.5) : 2.0 * (0.5 - c);
}

inline double naive_z(double value, const std::vector<double>& refs) {
  if (refs.size() < 2) return kAbsent;
  double mean = 0.0;
  for (double r : refs) mean += r;
  mean /= static_cast<double>(refs.size());
  double var = 0.0;
  for (double r : refs) var += (r - mean) * (r - mean);
  var /= static_cast<double>(refs.size());
  if (var <= 0.0) return kAbsent;
  return (value - mean) / std::sqrt(var);
}

// All 13 slots for one decision, recomputed with plain corpus scans (no
// CorpusIndex, no shared helpers from the library).
inline std::array<double, kSlotCount> naive_profile(const AnnotationCorpus& corpus, size_t row) {
  const Decision& d = corpus.decisions[row];
  std::array<double, kSlotCount> out;
  out.fill(kAbsent);
  auto slot = [&out](Slot s) -> double& { return out[static_cast<int>(s)]; };

  slot(Slot::UserLabel) = static_cast<double>(d.label);
  slot(Slot::ReportedConfidence) = d.confidence;
  slot(Slot::SmoothedConfidence) = naive_smoothed(d.confidence);
  slot(Slot::DecisionTime) = d.decision_time;

  std::vector<const Decision*> peers;
  std::vector<double> peer_times;
  for (const Decision& other : corpus.decisions) {
    if (other.domain.name() == d.domain.name() && other.sample_id == d.sample_id &&
        other.annotator_id != d.annotator_id) {
      peers.push_back(&other);
      peer_times.push_back(other.decision_time);
    }
  }
  slot(Slot::ExternalTimeZ) = naive_z(d.decision_time, peer_times);

  std::vector<double> own_other_times;
  int session_len = 0;
  for (const Decision& other : corpus.decisions) {
    if (other.annotator_id == d.annotator_id && other.domain.name() == d.domain.name()) {
      session_len = std::max(session_len, other.position);
      if (other.position != d.position) own_other_times.push_back(other.decision_time);
    }
  }
  slot(Slot::InternalTimeZ) = naive_z(d.decision_time, own_other_times);

  auto meta = corpus.annotators.find(d.annotator_id);
  if (meta != corpus.annotators.end()) {
    slot(Slot::OverallSessionTime) = meta->second.total_session_time;
    slot(Slot::RiddlePrior) = meta->second.riddle_score;
  }
  if (session_len > 0)
    slot(Slot::PositionNorm) = static_cast<double>(d.position) / static_cast<double>(session_len);

  if (!peers.empty()) {
    size_t ones = 0;
    double conf_sum = 0.0;
    double smooth_sum = 0.0;
    for (const Decision* p : peers) {
      if (p->label == 1) ++ones;
      conf_sum += p->confidence;
      smooth_sum += naive_smoothed(p->confidence);
    }
    const size_t zeros = peers.size() - ones;
    if (ones == zeros) {
      slot(Slot::PeerMajorityLabel) = 0.5;
      slot(Slot::PeerAgreement) = 0.5;
    } else {
      slot(Slot::PeerMajorityLabel) = ones > zeros ? 1.0 : 0.0;
      slot(Slot::PeerAgreement) =
          static_cast<double>(std::max(ones, zeros)) / static_cast<double>(peers.size());
    }
    slot(Slot::PeerMeanConfidence) = conf_sum / static_cast<double>(peers.size());
    slot(Slot::PeerMeanSmoothedConfidence) = smooth_sum / static_cast<double>(peers.size());
  }

  return out;
}

// NaN-aware comparison: both absent, or both finite within tol.
inline bool same_value(double a, double b, double tol) {
  if (std::isnan(a) && std::isnan(b)) return true;
  if (std::isnan(a) != std::isnan(b)) return false;
  return std::fabs(a - b) <= tol;
}

}  // namespace testsupport
