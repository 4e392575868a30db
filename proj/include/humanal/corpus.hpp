#pragma once

// Core data model: domains, annotator decisions, ground truth, and the
// corpus container with its lookup index. Labels are binary (0 = no match,
// 1 = match). Times are seconds in memory; the missing-value marker is NaN.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace humanal {

// Marker for an absent numeric value (unavailable feature, missing field).
inline constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

inline bool is_absent(double v) { return std::isnan(v); }

// A matching-task domain. Three studied task families have fixed names;
// anything else is carried through as Other with its raw name.
class Domain {
public:
  enum class Kind { SM, EM, TM, Other };

  Domain() = default;
  explicit Domain(std::string name) : name_(std::move(name)) {
    if (name_ == "SM") kind_ = Kind::SM;
    else if (name_ == "EM") kind_ = Kind::EM;
    else if (name_ == "TM") kind_ = Kind::TM;
    else kind_ = Kind::Other;
  }

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }

  bool operator==(const Domain& o) const { return name_ == o.name_; }
  bool operator!=(const Domain& o) const { return name_ != o.name_; }
  bool operator<(const Domain& o) const { return name_ < o.name_; }

private:
  std::string name_;
  Kind kind_ = Kind::Other;
};

// One annotator judgment on one sample: the reported binary label, the
// reported confidence in [0, 1] (0 = fully confident no-match, 1 = fully
// confident match, 0.5 = unsure), the decision time in seconds, and the
// 1-based position within the annotator's session in that domain. The
// label is derived from the confidence slider: label = 1 iff c >= 0.5.
struct Decision {
  std::string annotator_id;
  Domain domain;
  std::string sample_id;
  int label = 0;                // 0 or 1
  double confidence = 0.5;      // in [0, 1]
  double decision_time = 0.0;   // seconds, > 0
  int position = 1;             // 1-based index within the session
};

// Per-annotator metadata. riddle_score is the fraction of screening
// riddles answered correctly; total_session_time covers the whole sitting
// and is never smaller than the sum of the annotator's decision times.
struct AnnotatorMeta {
  std::string annotator_id;
  double riddle_score = 0.0;        // in [0, 1]
  double total_session_time = 0.0;  // seconds, > 0
};

struct GroundTruthEntry {
  Domain domain;
  std::string sample_id;
  int truth = 0;  // 0 or 1
};

// Keys used by indexes and result tables. Ordered so map iteration is
// deterministic.
struct SampleKey {
  std::string domain_name;
  std::string sample_id;
  auto operator<=>(const SampleKey&) const = default;
};

struct DecisionKey {
  std::string annotator_id;
  std::string domain_name;
  std::string sample_id;
  auto operator<=>(const DecisionKey&) const = default;
};

using TruthMap = std::map<SampleKey, int>;
using LabelMap = std::map<DecisionKey, int>;

inline SampleKey sample_key(const Decision& d) { return {d.domain.name(), d.sample_id}; }
inline DecisionKey decision_key(const Decision& d) {
  return {d.annotator_id, d.domain.name(), d.sample_id};
}

struct AnnotationCorpus {
  std::vector<Decision> decisions;
  std::map<std::string, AnnotatorMeta> annotators;
  std::optional<TruthMap> truths;

  bool has_truths() const { return truths.has_value(); }

  // Truth for one decision; nullopt when no truth is attached.
  std::optional<int> truth_of(const Decision& d) const {
    if (!truths) return std::nullopt;
    auto it = truths->find(sample_key(d));
    if (it == truths->end()) return std::nullopt;
    return it->second;
  }
};

// Precomputed lookup structure over a corpus. Row indices refer to
// corpus.decisions; all grouping vectors preserve corpus order, which keeps
// every downstream computation deterministic.
class CorpusIndex {
public:
  explicit CorpusIndex(const AnnotationCorpus& corpus) : corpus_(&corpus) {
    for (size_t i = 0; i < corpus.decisions.size(); ++i) {
      const Decision& d = corpus.decisions[i];
      by_sample_[sample_key(d)].push_back(i);
      by_annotator_[d.annotator_id].push_back(i);
      by_session_[{d.annotator_id, d.domain.name()}].push_back(i);
      domains_.insert({d.domain.name(), d.domain});
    }
  }

  const AnnotationCorpus& corpus() const { return *corpus_; }

  // Rows for one sample, in corpus order.
  const std::vector<size_t>* sample_rows(const SampleKey& key) const {
    auto it = by_sample_.find(key);
    return it == by_sample_.end() ? nullptr : &it->second;
  }

  // Rows for one annotator across all domains, in corpus order.
  const std::vector<size_t>* annotator_rows(const std::string& annotator_id) const {
    auto it = by_annotator_.find(annotator_id);
    return it == by_annotator_.end() ? nullptr : &it->second;
  }

  // Rows for one annotator within one domain (a session), in corpus order.
  const std::vector<size_t>* session_rows(const std::string& annotator_id,
                                          const std::string& domain_name) const {
    auto it = by_session_.find({annotator_id, domain_name});
    return it == by_session_.end() ? nullptr : &it->second;
  }

  std::vector<Domain> domains() const {
    std::vector<Domain> result;
    result.reserve(domains_.size());
    for (const auto& [name, dom] : domains_) result.push_back(dom);
    return result;
  }

  std::vector<std::string> annotator_ids() const {
    std::vector<std::string> result;
    result.reserve(by_annotator_.size());
    for (const auto& [id, rows] : by_annotator_) result.push_back(id);
    return result;
  }

  std::vector<SampleKey> sample_keys() const {
    std::vector<SampleKey> result;
    result.reserve(by_sample_.size());
    for (const auto& [key, rows] : by_sample_) result.push_back(key);
    return result;
  }

  // Length of an annotator's session in a domain, taken as the largest
  // observed position so that position/session_length stays in (0, 1]
  // even on sub-corpora produced by splits.
  int session_length(const std::string& annotator_id, const std::string& domain_name) const {
    const auto* rows = session_rows(annotator_id, domain_name);
    if (!rows || rows->empty()) return 0;
    int max_pos = 0;
    for (size_t r : *rows) max_pos = std::max(max_pos, corpus_->decisions[r].position);
    return max_pos;
  }

private:
  const AnnotationCorpus* corpus_;
  std::map<SampleKey, std::vector<size_t>> by_sample_;
  std::map<std::string, std::vector<size_t>> by_annotator_;
  std::map<std::pair<std::string, std::string>, std::vector<size_t>> by_session_;
  std::map<std::string, Domain> domains_;
};

}  // namespace humanal
