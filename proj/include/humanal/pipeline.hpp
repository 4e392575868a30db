#pragma once

// End-to-end calibration: featurize a truth-labeled training corpus, pick
// and fit a classifier, and emit calibrated labels for a test corpus.
// Also provides the two reference label producers (the annotator's own
// label, and per-sample majority vote).

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "humanal/classifiers.hpp"
#include "humanal/corpus.hpp"
#include "humanal/features.hpp"

namespace humanal {

struct CalibrationRun {
  FeatureMask mask;
  SelectionReport selection;
  TrainedModel model;
  LabelMap calibrated;  // every test decision gets exactly one label
  uint64_t seed = 0;
  bool used_fallback = false;  // degenerate training set -> constant model
};

// Trains on `train` (must carry ground truth; peer statistics never leave
// the training cohort), then labels every decision of `test` using
// features computed within the test cohort only. Model selection runs
// stratified CV over `specs` with per-spec seeds derived from `seed`.
// A single-class training set falls back to a constant predictor of that
// class, recorded in the selection report.
CalibrationRun calibrate(const AnnotationCorpus& train, const AnnotationCorpus& test,
                         const FeatureMask& mask, const std::vector<ModelSpec>& specs,
                         uint64_t seed, int cv_folds = 5,
                         SelectionMode mode = SelectionMode::CrossValidation);

// Each decision's own reported label.
LabelMap baseline_labels(const AnnotationCorpus& corpus);

// Per-sample mode of the labels; ties resolve to 1 by default (matching
// the confidence-fold convention), or to 0 when tie_to_one is false.
std::map<SampleKey, int> majority_vote_labels(const AnnotationCorpus& corpus,
                                              bool tie_to_one = true);

}  // namespace humanal
