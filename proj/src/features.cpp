// Behavioral profile extraction.

#include "humanal/features.hpp"

#include <cmath>

#include "humanal/errors.hpp"
#include "humanal/stats.hpp"

namespace humanal {

const char* slot_name(Slot slot) {
  switch (slot) {
    case Slot::UserLabel: return "user_label";
    case Slot::ReportedConfidence: return "reported_confidence";
    case Slot::SmoothedConfidence: return "smoothed_confidence";
    case Slot::DecisionTime: return "decision_time";
    case Slot::ExternalTimeZ: return "external_time_z";
    case Slot::InternalTimeZ: return "internal_time_z";
    case Slot::OverallSessionTime: return "overall_session_time";
    case Slot::PositionNorm: return "position_norm";
    case Slot::RiddlePrior: return "riddle_prior";
    case Slot::PeerMajorityLabel: return "peer_majority_label";
    case Slot::PeerAgreement: return "peer_agreement";
    case Slot::PeerMeanConfidence: return "peer_mean_confidence";
    case Slot::PeerMeanSmoothedConfidence: return "peer_mean_smoothed_confidence";
  }
  return "unknown";
}

const char* feature_set_name(FeatureSet set) {
  switch (set) {
    case FeatureSet::UserDecision: return "UserDecision";
    case FeatureSet::Confidence: return "Confidence";
    case FeatureSet::Time: return "Time";
    case FeatureSet::Majority: return "Majority";
    case FeatureSet::Priors: return "Priors";
  }
  return "unknown";
}

FeatureSet slot_set(Slot slot) {
  switch (slot) {
    case Slot::UserLabel: return FeatureSet::UserDecision;
    case Slot::ReportedConfidence:
    case Slot::SmoothedConfidence: return FeatureSet::Confidence;
    case Slot::DecisionTime:
    case Slot::ExternalTimeZ:
    case Slot::InternalTimeZ:
    case Slot::OverallSessionTime:
    case Slot::PositionNorm: return FeatureSet::Time;
    case Slot::RiddlePrior: return FeatureSet::Priors;
    case Slot::PeerMajorityLabel:
    case Slot::PeerAgreement:
    case Slot::PeerMeanConfidence:
    case Slot::PeerMeanSmoothedConfidence: return FeatureSet::Majority;
  }
  return FeatureSet::UserDecision;
}

std::vector<Slot> feature_set_slots(FeatureSet set) {
  std::vector<Slot> result;
  for (int i = 0; i < kSlotCount; ++i) {
    const Slot slot = static_cast<Slot>(i);
    if (slot_set(slot) == set) result.push_back(slot);
  }
  return result;
}

std::optional<FeatureSet> parse_feature_set(const std::string& name) {
  for (int i = 0; i < kFeatureSetCount; ++i) {
    const FeatureSet set = static_cast<FeatureSet>(i);
    if (name == feature_set_name(set)) return set;
  }
  return std::nullopt;
}

FeatureMask FeatureMask::full() { return FeatureMask((1u << kFeatureSetCount) - 1); }

FeatureMask FeatureMask::of(const std::vector<FeatureSet>& sets) {
  unsigned bits = 0;
  for (FeatureSet set : sets) bits |= 1u << static_cast<int>(set);
  if (bits == 0) throw ConfigError("feature mask must enable at least one feature set");
  return FeatureMask(bits);
}

FeatureMask FeatureMask::parse(const std::string& text) {
  std::vector<FeatureSet> sets;
  std::string token;
  for (size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ',') {
      if (!token.empty()) {
        auto set = parse_feature_set(token);
        if (!set) throw ConfigError("unknown feature set '" + token + "'");
        sets.push_back(*set);
        token.clear();
      }
    } else if (!std::isspace(static_cast<unsigned char>(text[i]))) {
      token.push_back(text[i]);
    }
  }
  return of(sets);
}

std::optional<FeatureMask> FeatureMask::try_without(FeatureSet set) const {
  const unsigned bits = bits_ & ~(1u << static_cast<int>(set));
  if (bits == 0) return std::nullopt;
  return FeatureMask(bits);
}

std::vector<FeatureSet> FeatureMask::sets() const {
  std::vector<FeatureSet> result;
  for (int i = 0; i < kFeatureSetCount; ++i)
    if ((bits_ >> i) & 1u) result.push_back(static_cast<FeatureSet>(i));
  return result;
}

std::vector<Slot> FeatureMask::slots() const {
  std::vector<Slot> result;
  for (int i = 0; i < kSlotCount; ++i) {
    const Slot slot = static_cast<Slot>(i);
    if (contains(slot)) result.push_back(slot);
  }
  return result;
}

std::string FeatureMask::to_string() const {
  std::string result;
  for (FeatureSet set : sets()) {
    if (!result.empty()) result += ",";
    result += feature_set_name(set);
  }
  return result;
}

double smoothed_confidence(double c) {
  if (!(c >= 0.0 && c <= 1.0))
    throw DomainError("confidence " + std::to_string(c) + " outside [0,1]");
  return c >= 0.5 ? 2.0 * (c - 0.5) : 2.0 * (0.5 - c);
}

namespace {

// Shared z-score core: two-pass mean/population-variance in input order.
double z_score_against(double value, const std::vector<double>& reference) {
  if (reference.size() < 2) return kAbsent;
  const double mean = mean_of(reference);
  const double var = population_variance(reference, mean);
  if (var <= 0.0) return kAbsent;
  return (value - mean) / std::sqrt(var);
}

}  // namespace

double external_time_z(double decision_time, const std::vector<double>& peer_times) {
  return z_score_against(decision_time, peer_times);
}

double internal_time_z(double decision_time, const std::vector<double>& own_other_times) {
  return z_score_against(decision_time, own_other_times);
}

MajorityFeatures majority_features(const std::vector<const Decision*>& peers) {
  MajorityFeatures out;
  if (peers.empty()) return out;

  size_t ones = 0;
  std::vector<double> confidences, smootheds;
  confidences.reserve(peers.size());
  smootheds.reserve(peers.size());
  for (const Decision* peer : peers) {
    if (peer->label == 1) ++ones;
    confidences.push_back(peer->confidence);
    smootheds.push_back(smoothed_confidence(peer->confidence));
  }
  const size_t zeros = peers.size() - ones;
  if (ones == zeros) {
    out.majority_label = 0.5;
    out.agreement = 0.5;
  } else {
    out.majority_label = ones > zeros ? 1.0 : 0.0;
    out.agreement =
        static_cast<double>(std::max(ones, zeros)) / static_cast<double>(peers.size());
  }
  out.mean_confidence = mean_of(confidences);
  out.mean_smoothed_confidence = mean_of(smootheds);
  return out;
}

FeatureVector build_profile(const Decision& decision, const CorpusIndex& index,
                            const FeatureMask& mask) {
  FeatureVector vec;
  vec.values.fill(kAbsent);
  const AnnotationCorpus& corpus = index.corpus();

  if (mask.contains(FeatureSet::UserDecision))
    vec[Slot::UserLabel] = static_cast<double>(decision.label);

  if (mask.contains(FeatureSet::Confidence)) {
    vec[Slot::ReportedConfidence] = decision.confidence;
    vec[Slot::SmoothedConfidence] = smoothed_confidence(decision.confidence);
  }

  if (mask.contains(FeatureSet::Time)) {
    vec[Slot::DecisionTime] = decision.decision_time;

    std::vector<double> peer_times;
    if (const auto* rows = index.sample_rows(sample_key(decision))) {
      for (size_t r : *rows) {
        const Decision& other = corpus.decisions[r];
        if (other.annotator_id != decision.annotator_id) peer_times.push_back(other.decision_time);
      }
    }
    vec[Slot::ExternalTimeZ] = external_time_z(decision.decision_time, peer_times);

    std::vector<double> own_other_times;
    if (const auto* rows = index.session_rows(decision.annotator_id, decision.domain.name())) {
      for (size_t r : *rows) {
        const Decision& other = corpus.decisions[r];
        if (other.position != decision.position) own_other_times.push_back(other.decision_time);
      }
    }
    vec[Slot::InternalTimeZ] = internal_time_z(decision.decision_time, own_other_times);

    auto meta = corpus.annotators.find(decision.annotator_id);
    if (meta != corpus.annotators.end())
      vec[Slot::OverallSessionTime] = meta->second.total_session_time;

    const int session_len = index.session_length(decision.annotator_id, decision.domain.name());
    if (session_len > 0)
      vec[Slot::PositionNorm] =
          static_cast<double>(decision.position) / static_cast<double>(session_len);
  }

  if (mask.contains(FeatureSet::Priors)) {
    auto meta = corpus.annotators.find(decision.annotator_id);
    if (meta != corpus.annotators.end()) vec[Slot::RiddlePrior] = meta->second.riddle_score;
  }

  if (mask.contains(FeatureSet::Majority)) {
    std::vector<const Decision*> peers;
    if (const auto* rows = index.sample_rows(sample_key(decision))) {
      for (size_t r : *rows) {
        const Decision& other = corpus.decisions[r];
        if (other.annotator_id != decision.annotator_id) peers.push_back(&other);
      }
    }
    const MajorityFeatures peer_stats = majority_features(peers);
    vec[Slot::PeerMajorityLabel] = peer_stats.majority_label;
    vec[Slot::PeerAgreement] = peer_stats.agreement;
    vec[Slot::PeerMeanConfidence] = peer_stats.mean_confidence;
    vec[Slot::PeerMeanSmoothedConfidence] = peer_stats.mean_smoothed_confidence;
  }

  return vec;
}

FeatureMatrix featurize_corpus(const AnnotationCorpus& corpus, const FeatureMask& mask) {
  FeatureMatrix matrix;
  matrix.columns = mask.slots();
  matrix.rows.resize(corpus.decisions.size());

  const CorpusIndex index(corpus);
  for (size_t i = 0; i < corpus.decisions.size(); ++i) {
    const FeatureVector vec = build_profile(corpus.decisions[i], index, mask);
    std::vector<double>& row = matrix.rows[i];
    row.reserve(matrix.columns.size());
    for (Slot slot : matrix.columns) row.push_back(vec[slot]);
  }
  return matrix;
}

}  // namespace humanal
