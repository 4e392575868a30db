// Corpus invariant checks and ground-truth joining.

#include "humanal/validation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "humanal/errors.hpp"

namespace humanal {

namespace {

std::string decision_id(const Decision& d) {
  return d.annotator_id + "/" + d.domain.name() + "/" + d.sample_id;
}

}  // namespace

const char* violation_kind_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::MissingAnnotator: return "MissingAnnotator";
    case ViolationKind::ConfidenceOutOfRange: return "ConfidenceOutOfRange";
    case ViolationKind::NonPositiveTime: return "NonPositiveTime";
    case ViolationKind::BadPosition: return "BadPosition";
    case ViolationKind::LabelConfidenceInconsistent: return "LabelConfidenceInconsistent";
    case ViolationKind::DuplicateSample: return "DuplicateSample";
    case ViolationKind::NonContiguousPositions: return "NonContiguousPositions";
    case ViolationKind::MissingTruth: return "MissingTruth";
    case ViolationKind::RiddleScoreOutOfRange: return "RiddleScoreOutOfRange";
    case ViolationKind::SessionTimeInvalid: return "SessionTimeInvalid";
    case ViolationKind::SessionTimeTooShort: return "SessionTimeTooShort";
  }
  return "Unknown";
}

ValidationReport validate_corpus(const AnnotationCorpus& corpus) {
  ValidationReport report;
  auto add = [&report](ViolationKind kind, std::string record, std::string detail) {
    report.violations.push_back({kind, std::move(record), std::move(detail)});
  };

  // Per-decision field checks.
  std::set<DecisionKey> seen;
  std::map<std::pair<std::string, std::string>, std::vector<int>> session_positions;
  std::map<std::string, double> decision_time_sum;
  for (const Decision& d : corpus.decisions) {
    const std::string id = decision_id(d);
    if (!corpus.annotators.count(d.annotator_id))
      add(ViolationKind::MissingAnnotator, id, "annotator not present in annotator metadata");
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
      add(ViolationKind::ConfidenceOutOfRange, id,
          "confidence " + std::to_string(d.confidence) + " outside [0,1]");
    if (!(d.decision_time > 0.0))
      add(ViolationKind::NonPositiveTime, id,
          "decision_time " + std::to_string(d.decision_time) + " must be > 0");
    if (d.position < 1)
      add(ViolationKind::BadPosition, id,
          "position " + std::to_string(d.position) + " must be >= 1");
    const int expected_label = d.confidence >= 0.5 ? 1 : 0;
    if (d.confidence >= 0.0 && d.confidence <= 1.0 && d.label != expected_label)
      add(ViolationKind::LabelConfidenceInconsistent, id,
          "label " + std::to_string(d.label) + " does not match confidence " +
              std::to_string(d.confidence));
    if (!seen.insert(decision_key(d)).second)
      add(ViolationKind::DuplicateSample, id, "annotator answered this sample more than once");
    session_positions[{d.annotator_id, d.domain.name()}].push_back(d.position);
    decision_time_sum[d.annotator_id] += d.decision_time;
    if (corpus.truths && !corpus.truths->count(sample_key(d)))
      add(ViolationKind::MissingTruth, id, "no ground-truth entry for this sample");
  }

  // Sessions must cover positions 1..n exactly.
  for (auto& [session, positions] : session_positions) {
    std::vector<int> sorted = positions;
    std::sort(sorted.begin(), sorted.end());
    bool contiguous = true;
    for (size_t i = 0; i < sorted.size(); ++i)
      if (sorted[i] != static_cast<int>(i) + 1) contiguous = false;
    if (!contiguous)
      add(ViolationKind::NonContiguousPositions, session.first + "/" + session.second,
          "session positions are not the contiguous run 1..n");
  }

  // Annotator metadata checks.
  for (const auto& [id, meta] : corpus.annotators) {
    if (!(meta.riddle_score >= 0.0 && meta.riddle_score <= 1.0))
      add(ViolationKind::RiddleScoreOutOfRange, id,
          "riddle_score " + std::to_string(meta.riddle_score) + " outside [0,1]");
    if (!(meta.total_session_time > 0.0))
      add(ViolationKind::SessionTimeInvalid, id,
          "total_session_time " + std::to_string(meta.total_session_time) + " must be > 0");
    auto it = decision_time_sum.find(id);
    if (it != decision_time_sum.end() &&
        meta.total_session_time < it->second - 1e-6)
      add(ViolationKind::SessionTimeTooShort, id,
          "total_session_time " + std::to_string(meta.total_session_time) +
              " below the sum of decision times " + std::to_string(it->second));
  }

  return report;
}

AnnotationCorpus join_ground_truth(const AnnotationCorpus& corpus,
                                   const std::vector<GroundTruthEntry>& truths) {
  TruthMap map;
  for (const GroundTruthEntry& entry : truths) {
    const SampleKey key{entry.domain.name(), entry.sample_id};
    auto [it, inserted] = map.emplace(key, entry.truth);
    if (!inserted && it->second != entry.truth)
      throw ConfigError("conflicting ground-truth entries for sample " + key.domain_name + "/" +
                        key.sample_id);
  }

  std::vector<std::string> missing;
  std::set<SampleKey> reported;
  for (const Decision& d : corpus.decisions) {
    const SampleKey key = sample_key(d);
    if (!map.count(key) && reported.insert(key).second)
      missing.push_back(key.domain_name + "/" + key.sample_id);
  }
  if (!missing.empty()) throw MissingTruthError(missing);

  AnnotationCorpus joined = corpus;
  joined.truths = std::move(map);
  return joined;
}

}  // namespace humanal
