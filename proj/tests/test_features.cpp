// Behavioral profile extraction: slot/set naming, masks, the individual
// feature transforms, and full profiles against an index-free oracle.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "humanal/corpus.hpp"
#include "humanal/errors.hpp"
#include "humanal/features.hpp"
#include "humanal/rng.hpp"

#include "support.hpp"

using namespace humanal;
using testsupport::make_decision;
using testsupport::make_meta;

namespace {

// Three annotators on one shared sample; a1 also has a second decision.
// Positions 2..3 for a1 emulate a sub-corpus cut out of a longer session.
AnnotationCorpus profile_corpus() {
  AnnotationCorpus corpus;
  corpus.decisions.push_back(make_decision("a1", "D", "s1", 0.9, 2.0, 2));
  corpus.decisions.push_back(make_decision("a1", "D", "s2", 0.3, 6.0, 3));
  corpus.decisions.push_back(make_decision("a2", "D", "s1", 0.6, 1.0, 1));
  corpus.decisions.push_back(make_decision("a3", "D", "s1", 0.2, 3.0, 1));
  corpus.annotators["a1"] = make_meta("a1", 0.75, 120.0);
  corpus.annotators["a2"] = make_meta("a2", 0.5, 60.0);
  corpus.annotators["a3"] = make_meta("a3", 1.0, 90.0);
  return corpus;
}

}  // namespace

TEST_CASE("slot and set names are stable") {
  CHECK(std::string(slot_name(Slot::UserLabel)) == "user_label");
  CHECK(std::string(slot_name(Slot::SmoothedConfidence)) == "smoothed_confidence");
  CHECK(std::string(slot_name(Slot::ExternalTimeZ)) == "external_time_z");
  CHECK(std::string(slot_name(Slot::InternalTimeZ)) == "internal_time_z");
  CHECK(std::string(slot_name(Slot::OverallSessionTime)) == "overall_session_time");
  CHECK(std::string(slot_name(Slot::PositionNorm)) == "position_norm");
  CHECK(std::string(slot_name(Slot::RiddlePrior)) == "riddle_prior");
  CHECK(std::string(slot_name(Slot::PeerMeanSmoothedConfidence)) ==
        "peer_mean_smoothed_confidence");

  CHECK(std::string(feature_set_name(FeatureSet::UserDecision)) == "UserDecision");
  CHECK(std::string(feature_set_name(FeatureSet::Confidence)) == "Confidence");
  CHECK(std::string(feature_set_name(FeatureSet::Time)) == "Time");
  CHECK(std::string(feature_set_name(FeatureSet::Majority)) == "Majority");
  CHECK(std::string(feature_set_name(FeatureSet::Priors)) == "Priors");
}

TEST_CASE("slots group into sets of sizes 1, 2, 5, 4, 1") {
  CHECK(feature_set_slots(FeatureSet::UserDecision).size() == 1);
  CHECK(feature_set_slots(FeatureSet::Confidence).size() == 2);
  CHECK(feature_set_slots(FeatureSet::Time).size() == 5);
  CHECK(feature_set_slots(FeatureSet::Majority).size() == 4);
  CHECK(feature_set_slots(FeatureSet::Priors).size() == 1);

  int total = 0;
  for (int i = 0; i < kFeatureSetCount; ++i) {
    for (Slot slot : feature_set_slots(static_cast<FeatureSet>(i))) {
      CHECK(slot_set(slot) == static_cast<FeatureSet>(i));
      ++total;
    }
  }
  CHECK(total == kSlotCount);

  CHECK(parse_feature_set("Majority") == FeatureSet::Majority);
  CHECK_FALSE(parse_feature_set("majority").has_value());
  CHECK_FALSE(parse_feature_set("").has_value());
}

TEST_CASE("feature masks parse, print, and project") {
  const FeatureMask full = FeatureMask::full();
  for (int i = 0; i < kFeatureSetCount; ++i) CHECK(full.contains(static_cast<FeatureSet>(i)));
  CHECK(full.slots().size() == static_cast<size_t>(kSlotCount));
  CHECK(full.to_string() == "UserDecision,Confidence,Time,Majority,Priors");

  CHECK_THROWS_AS(FeatureMask::of({}), ConfigError);
  CHECK_THROWS_AS(FeatureMask::parse(""), ConfigError);
  CHECK_THROWS_AS(FeatureMask::parse("  ,  "), ConfigError);
  CHECK_THROWS_AS(FeatureMask::parse("UserDecision,Bogus"), ConfigError);

  const FeatureMask spaced = FeatureMask::parse(" Time , UserDecision ");
  CHECK(spaced.contains(FeatureSet::Time));
  CHECK(spaced.contains(FeatureSet::UserDecision));
  CHECK_FALSE(spaced.contains(FeatureSet::Majority));
  // Printed in enum order regardless of parse order; duplicates collapse.
  CHECK(spaced.to_string() == "UserDecision,Time");
  CHECK(FeatureMask::parse("Time,Time").to_string() == "Time");
  CHECK(spaced == FeatureMask::of({FeatureSet::UserDecision, FeatureSet::Time}));
  CHECK(spaced != full);

  // Slot-level membership follows the owning set.
  CHECK(spaced.contains(Slot::DecisionTime));
  CHECK_FALSE(spaced.contains(Slot::ReportedConfidence));

  // Projection keeps slot order: UserDecision slot then the five Time slots.
  const std::vector<Slot> slots = spaced.slots();
  REQUIRE(slots.size() == 6);
  CHECK(slots[0] == Slot::UserLabel);
  CHECK(slots[1] == Slot::DecisionTime);
  CHECK(slots[5] == Slot::PositionNorm);

  const auto without_time = spaced.try_without(FeatureSet::Time);
  REQUIRE(without_time.has_value());
  CHECK(without_time->to_string() == "UserDecision");
  // Removing an absent set is a no-op; removing the last set is refused.
  CHECK(spaced.try_without(FeatureSet::Priors).value() == spaced);
  CHECK_FALSE(without_time->try_without(FeatureSet::UserDecision).has_value());
}

TEST_CASE("smoothed confidence folds the scale at the unsure midpoint") {
  CHECK(smoothed_confidence(0.5) == 0.0);
  CHECK(smoothed_confidence(0.0) == 1.0);
  CHECK(smoothed_confidence(1.0) == 1.0);
  CHECK(smoothed_confidence(0.75) == 0.25 * 2.0);
  CHECK(smoothed_confidence(0.25) == 0.25 * 2.0);
  // The two sides fold symmetrically for grid-exact inputs.
  CHECK(smoothed_confidence(0.125) == smoothed_confidence(0.875));

  CHECK_THROWS_AS(smoothed_confidence(-0.01), DomainError);
  CHECK_THROWS_AS(smoothed_confidence(1.01), DomainError);
  CHECK_THROWS_AS(smoothed_confidence(kAbsent), DomainError);
}

TEST_CASE("time z-scores use population variance and absence rules") {
  CHECK(external_time_z(3.0, {1.0, 3.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(external_time_z(1.0, {1.0, 3.0}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(is_absent(external_time_z(3.0, {})));
  CHECK(is_absent(external_time_z(3.0, {5.0})));
  CHECK(is_absent(external_time_z(3.0, {2.0, 2.0, 2.0})));

  CHECK(internal_time_z(4.0, {1.0, 2.0, 3.0}) ==
        doctest::Approx(2.0 / std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(is_absent(internal_time_z(4.0, {7.0})));
}

TEST_CASE("majority features over hand-built peer groups") {
  CHECK(is_absent(majority_features({}).majority_label));
  CHECK(is_absent(majority_features({}).agreement));
  CHECK(is_absent(majority_features({}).mean_confidence));
  CHECK(is_absent(majority_features({}).mean_smoothed_confidence));

  const Decision p1 = make_decision("p1", "D", "s", 0.9, 1.0, 1);
  const Decision p2 = make_decision("p2", "D", "s", 0.8, 1.0, 1);
  const Decision p3 = make_decision("p3", "D", "s", 0.2, 1.0, 1);

  const MajorityFeatures two_one = majority_features({&p1, &p2, &p3});
  CHECK(two_one.majority_label == 1.0);
  CHECK(two_one.agreement == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(two_one.mean_confidence == doctest::Approx((0.9 + 0.8 + 0.2) / 3.0).epsilon(1e-15));
  CHECK(two_one.mean_smoothed_confidence ==
        doctest::Approx((0.8 + 0.6 + 0.6) / 3.0).epsilon(1e-12));

  const MajorityFeatures tied = majority_features({&p1, &p3});
  CHECK(tied.majority_label == 0.5);
  CHECK(tied.agreement == 0.5);
  CHECK(tied.mean_confidence == doctest::Approx(0.55).epsilon(1e-15));

  const MajorityFeatures zeros = majority_features({&p3});
  CHECK(zeros.majority_label == 0.0);
  CHECK(zeros.agreement == 1.0);
}

TEST_CASE("build_profile on a hand-checked corpus") {
  const AnnotationCorpus corpus = profile_corpus();
  const CorpusIndex index(corpus);
  const FeatureVector vec = build_profile(corpus.decisions[0], index, FeatureMask::full());

  CHECK(vec[Slot::UserLabel] == 1.0);
  CHECK(vec[Slot::ReportedConfidence] == 0.9);
  CHECK(vec[Slot::SmoothedConfidence] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(vec[Slot::DecisionTime] == 2.0);
  // Peers on s1 took {1, 3} seconds: mean 2, sd 1, own time 2 -> z = 0.
  CHECK(vec[Slot::ExternalTimeZ] == doctest::Approx(0.0).epsilon(1e-15));
  // Only one other decision in a1's session -> undefined.
  CHECK(is_absent(vec[Slot::InternalTimeZ]));
  CHECK(vec[Slot::OverallSessionTime] == 120.0);
  // Session positions {2, 3}: length 3, own position 2.
  CHECK(vec[Slot::PositionNorm] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(vec[Slot::RiddlePrior] == 0.75);
  // Peers a2 (label 1) and a3 (label 0) tie.
  CHECK(vec[Slot::PeerMajorityLabel] == 0.5);
  CHECK(vec[Slot::PeerAgreement] == 0.5);
  CHECK(vec[Slot::PeerMeanConfidence] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(vec[Slot::PeerMeanSmoothedConfidence] == doctest::Approx(0.4).epsilon(1e-15));

  // Second decision: sole annotator on s2, last position of the session.
  const FeatureVector lone = build_profile(corpus.decisions[1], index, FeatureMask::full());
  CHECK(is_absent(lone[Slot::ExternalTimeZ]));
  CHECK(is_absent(lone[Slot::PeerMajorityLabel]));
  CHECK(is_absent(lone[Slot::PeerAgreement]));
  CHECK(lone[Slot::PositionNorm] == 1.0);
  CHECK(lone[Slot::UserLabel] == 0.0);
}

TEST_CASE("build_profile leaves masked-out sets absent") {
  const AnnotationCorpus corpus = profile_corpus();
  const CorpusIndex index(corpus);

  const FeatureVector only_time =
      build_profile(corpus.decisions[0], index, FeatureMask::of({FeatureSet::Time}));
  CHECK(is_absent(only_time[Slot::UserLabel]));
  CHECK(is_absent(only_time[Slot::ReportedConfidence]));
  CHECK(is_absent(only_time[Slot::RiddlePrior]));
  CHECK(is_absent(only_time[Slot::PeerMajorityLabel]));
  CHECK(only_time[Slot::DecisionTime] == 2.0);
  CHECK(only_time[Slot::OverallSessionTime] == 120.0);

  const FeatureVector only_user =
      build_profile(corpus.decisions[0], index, FeatureMask::of({FeatureSet::UserDecision}));
  CHECK(only_user[Slot::UserLabel] == 1.0);
  CHECK(is_absent(only_user[Slot::DecisionTime]));
}

TEST_CASE("build_profile tolerates missing annotator metadata") {
  AnnotationCorpus corpus = profile_corpus();
  corpus.annotators.erase("a1");
  const CorpusIndex index(corpus);
  const FeatureVector vec = build_profile(corpus.decisions[0], index, FeatureMask::full());
  CHECK(is_absent(vec[Slot::OverallSessionTime]));
  CHECK(is_absent(vec[Slot::RiddlePrior]));
  CHECK(vec[Slot::UserLabel] == 1.0);
}

TEST_CASE("featurize_corpus projects onto the enabled slots") {
  const AnnotationCorpus corpus = profile_corpus();
  const FeatureMask mask = FeatureMask::of({FeatureSet::Confidence, FeatureSet::Majority});
  const FeatureMatrix matrix = featurize_corpus(corpus, mask);

  CHECK(matrix.columns == mask.slots());
  REQUIRE(matrix.columns.size() == 6);
  CHECK(matrix.columns[0] == Slot::ReportedConfidence);
  REQUIRE(matrix.rows.size() == corpus.decisions.size());

  const CorpusIndex index(corpus);
  for (size_t i = 0; i < corpus.decisions.size(); ++i) {
    const FeatureVector vec = build_profile(corpus.decisions[i], index, mask);
    REQUIRE(matrix.rows[i].size() == matrix.columns.size());
    for (size_t c = 0; c < matrix.columns.size(); ++c) {
      CHECK(testsupport::same_value(matrix.rows[i][c], vec[matrix.columns[c]], 0.0));
    }
  }
}

TEST_CASE("profiles match an index-free recomputation on random corpora") {
  const std::vector<FeatureMask> masks = {
      FeatureMask::full(),
      FeatureMask::of({FeatureSet::Time, FeatureSet::Majority}),
      FeatureMask::of({FeatureSet::UserDecision, FeatureSet::Confidence, FeatureSet::Priors}),
  };

  int values_checked = 0;
  int mismatches = 0;
  std::string first_mismatch;
  for (uint64_t trial = 0; trial < 200; ++trial) {
    Rng rng(derive_seed(0xFEA7, trial));
    const AnnotationCorpus corpus =
        testsupport::random_small_corpus(rng, 5, 5, trial % 3 == 0 ? 2 : 1);
    const FeatureMask& mask = masks[trial % masks.size()];

    const FeatureMatrix matrix = featurize_corpus(corpus, mask);
    REQUIRE(matrix.columns == mask.slots());
    REQUIRE(matrix.rows.size() == corpus.decisions.size());

    for (size_t i = 0; i < corpus.decisions.size(); ++i) {
      const auto expect = testsupport::naive_profile(corpus, i);
      for (size_t c = 0; c < matrix.columns.size(); ++c) {
        const double got = matrix.rows[i][c];
        const double want = expect[static_cast<int>(matrix.columns[c])];
        ++values_checked;
        if (!testsupport::same_value(got, want, 1e-12)) {
          ++mismatches;
          if (first_mismatch.empty()) {
            first_mismatch = "trial " + std::to_string(trial) + " row " + std::to_string(i) +
                             " slot " + slot_name(matrix.columns[c]) + ": got " +
                             std::to_string(got) + " want " + std::to_string(want);
          }
        }
      }
    }
  }
  CHECK_MESSAGE(mismatches == 0, first_mismatch);
  CHECK(values_checked > 10000);
}
