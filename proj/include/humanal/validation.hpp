#pragma once

// Corpus invariant checking and ground-truth joining. Validation never
// throws: every problem is collected into a report with the offending
// record's identifier.

#include <string>
#include <vector>

#include "humanal/corpus.hpp"

namespace humanal {

enum class ViolationKind {
  MissingAnnotator,            // decision references an unknown annotator_id
  ConfidenceOutOfRange,        // confidence outside [0, 1]
  NonPositiveTime,             // decision_time <= 0
  BadPosition,                 // position < 1
  LabelConfidenceInconsistent, // label != (confidence >= 0.5)
  DuplicateSample,             // same (annotator, domain, sample) twice
  NonContiguousPositions,      // session positions are not exactly 1..n
  MissingTruth,                // truths attached but a decision has none
  RiddleScoreOutOfRange,       // riddle_score outside [0, 1]
  SessionTimeInvalid,          // total_session_time <= 0
  SessionTimeTooShort,         // total_session_time < sum of decision times
};

const char* violation_kind_name(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string record;   // identifier of the offending record
  std::string detail;   // human-readable explanation
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Checks every corpus invariant; does not mutate. An empty report means
// the corpus is valid.
ValidationReport validate_corpus(const AnnotationCorpus& corpus);

// Returns a copy of the corpus with truths attached; decision order is
// preserved and the call is idempotent. Throws MissingTruthError listing
// every decision sample that has no truth entry, and ConfigError if the
// entries contain conflicting duplicates.
AnnotationCorpus join_ground_truth(const AnnotationCorpus& corpus,
                                   const std::vector<GroundTruthEntry>& truths);

}  // namespace humanal
