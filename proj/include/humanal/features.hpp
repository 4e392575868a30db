#pragma once

// Behavioral profile extraction: turns each decision into a fixed-order
// vector of 13 named slots grouped into five feature sets. Slots that are
// masked out or not computable (no peers, zero variance) carry the absent
// marker; they are never silently zero.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "humanal/corpus.hpp"

namespace humanal {

enum class Slot : int {
  UserLabel = 0,
  ReportedConfidence,
  SmoothedConfidence,
  DecisionTime,
  ExternalTimeZ,
  InternalTimeZ,
  OverallSessionTime,
  PositionNorm,
  RiddlePrior,
  PeerMajorityLabel,
  PeerAgreement,
  PeerMeanConfidence,
  PeerMeanSmoothedConfidence,
};

inline constexpr int kSlotCount = 13;

enum class FeatureSet : int {
  UserDecision = 0,  // user_label
  Confidence,        // reported_confidence, smoothed_confidence
  Time,              // decision_time, external/internal z, session time, position
  Majority,          // the four peer_* slots
  Priors,            // riddle_prior
};

inline constexpr int kFeatureSetCount = 5;

const char* slot_name(Slot slot);
const char* feature_set_name(FeatureSet set);
FeatureSet slot_set(Slot slot);
std::vector<Slot> feature_set_slots(FeatureSet set);
std::optional<FeatureSet> parse_feature_set(const std::string& name);

// Which of the five feature sets are enabled. Never empty.
class FeatureMask {
public:
  // All five sets enabled.
  static FeatureMask full();
  // Throws ConfigError when the list is empty.
  static FeatureMask of(const std::vector<FeatureSet>& sets);
  // Parses "Set[,Set...]" (throws ConfigError on unknown names or empty).
  static FeatureMask parse(const std::string& text);

  bool contains(FeatureSet set) const { return (bits_ >> static_cast<int>(set)) & 1u; }
  bool contains(Slot slot) const { return contains(slot_set(slot)); }

  // Mask with one set removed; empty result yields nullopt.
  std::optional<FeatureMask> try_without(FeatureSet set) const;

  // Enabled sets in enum order.
  std::vector<FeatureSet> sets() const;
  // Enabled slots in slot order.
  std::vector<Slot> slots() const;

  std::string to_string() const;

  bool operator==(const FeatureMask& o) const { return bits_ == o.bits_; }
  bool operator!=(const FeatureMask& o) const { return bits_ != o.bits_; }

private:
  explicit FeatureMask(unsigned bits) : bits_(bits) {}
  unsigned bits_ = 0;
};

// One decision's profile. Disabled or unavailable slots hold kAbsent.
struct FeatureVector {
  std::array<double, kSlotCount> values{};
  double operator[](Slot slot) const { return values[static_cast<int>(slot)]; }
  double& operator[](Slot slot) { return values[static_cast<int>(slot)]; }
};

// Dense matrix over the enabled slots only: masked-out feature sets have
// no column at all. rows[i] is aligned with the source corpus decision i.
struct FeatureMatrix {
  std::vector<Slot> columns;
  std::vector<std::vector<double>> rows;
};

// Decisiveness of a reported confidence: folds the [0,1] scale at the
// unsure midpoint, so 0.5 -> 0 and both extremes -> 1.
double smoothed_confidence(double c);

// Z-score of a decision time against peer times on the same sample
// (population standard deviation). Absent when fewer than 2 peer times or
// when they have zero variance.
double external_time_z(double decision_time, const std::vector<double>& peer_times);

// Same contract, against the annotator's other decision times in the
// same session.
double internal_time_z(double decision_time, const std::vector<double>& own_other_times);

struct MajorityFeatures {
  double majority_label = kAbsent;          // mode of peer labels, tie -> 0.5
  double agreement = kAbsent;               // fraction matching the mode, tie -> 0.5
  double mean_confidence = kAbsent;
  double mean_smoothed_confidence = kAbsent;
};

// Peer statistics for one sample; peers must exclude the target decision's
// own annotator. Zero peers leaves every slot absent.
MajorityFeatures majority_features(const std::vector<const Decision*>& peers);

// Full profile for one decision within its cohort corpus.
FeatureVector build_profile(const Decision& decision, const CorpusIndex& index,
                            const FeatureMask& mask);

// Profiles for every corpus decision, projected onto the enabled slots.
FeatureMatrix featurize_corpus(const AnnotationCorpus& corpus, const FeatureMask& mask);

}  // namespace humanal
