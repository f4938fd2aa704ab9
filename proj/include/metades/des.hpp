#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metades/competence_region.hpp"
#include "metades/dataset.hpp"
#include "metades/meta_classifier.hpp"
#include "metades/meta_features.hpp"
#include "metades/pool.hpp"

namespace metades {

struct DesHyperParams {
  std::size_t k = 7;
  std::size_t kp = 5;
  double consensus_threshold = 0.7;  // h_c
  double selection_threshold = 0.5;  // Upsilon

  void validate() const;
};

/// Fraction of `member_labels` equal to `true_label`.
double consensus(std::span<const int> member_labels, int true_label);
double consensus(const ClassifierPool& pool, std::span<const double> x, int true_label);
/// Meta-training keeps a sample iff its consensus is below h_c. A threshold
/// of 1 disables the filter, unanimous samples included.
inline bool passes_consensus_filter(double consensus_value, double threshold) {
  return threshold >= 1.0 || consensus_value < threshold;
}

/// Sum of weights per label; highest total wins, lowest label on ties. Only
/// labels with at least one vote are eligible; if every weight is zero the
/// vote falls back to plain counts.
int weighted_majority_vote(std::span<const int> labels, std::span<const double> weights,
                           std::size_t class_count);
int majority_vote(std::span<const int> labels, std::size_t class_count);

/// Trained generalization-phase model: pool, selector, selected mask and
/// the DSEL reference data it was trained against. Move-only; the DSEL
/// caches are rebuilt from the stored parts on construction.
class DesModel {
 public:
  DesModel(ClassifierPool pool, Dataset dsel, ScaleParams scale, ConfidenceBounds bounds,
           FeatureMask mask, MetaClassifier meta, DesHyperParams hyper, RrcConfig rrc);

  const ClassifierPool& pool() const { return *pool_; }
  const DselCache& cache() const { return *cache_; }
  const MetaFeatureExtractor& extractor() const { return *extractor_; }
  const Dataset& dsel() const { return cache_->dsel(); }
  const ScaleParams& scale() const { return scale_; }
  const FeatureMask& mask() const { return mask_; }
  const MetaClassifier& meta() const { return meta_; }
  const DesHyperParams& hyper() const { return hyper_; }
  const RrcConfig& rrc() const { return rrc_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  void set_class_names(std::vector<std::string> names) { class_names_ = std::move(names); }

  /// Replaces the selected mask and selector; both must agree with the
  /// meta-feature layout.
  void set_selector(FeatureMask mask, MetaClassifier meta);

 private:
  std::unique_ptr<ClassifierPool> pool_;
  std::unique_ptr<DselCache> cache_;
  std::unique_ptr<MetaFeatureExtractor> extractor_;
  ScaleParams scale_;
  FeatureMask mask_;
  MetaClassifier meta_;
  DesHyperParams hyper_;
  RrcConfig rrc_;
  std::vector<std::string> class_names_;
};

struct Classification {
  int label = 0;
  std::vector<double> competences;    // delta per pool member
  std::vector<std::size_t> selected;  // members with delta >= Upsilon
  bool fallback = false;              // no member cleared Upsilon
};

/// Selection and combination given per-member labels and competences:
/// members with delta >= threshold vote with weight delta. When none clears
/// the threshold the single member with the highest delta decides (lowest
/// index on ties).
Classification combine(std::span<const int> member_labels, std::span<const double> competences,
                       double threshold, std::size_t class_count);

/// Classifies an unscaled feature vector.
Classification classify(const DesModel& model, std::span<const double> raw_x);
/// Classifies an already-scaled feature vector.
Classification classify_scaled(const DesModel& model, std::span<const double> x);

enum class Method {
  kMetaDesOracle,
  kOracle,
  kOla,
  kLca,
  kKnoraE,
  kKnoraU,
  kSingleBest,
  kStaticSelection,
  kMajorityVote,
};

std::string_view method_name(Method m);
/// Accepts display names ("KNORA-E") and identifiers ("KNORA_E").
Method parse_method(std::string_view name);
std::vector<Method> all_methods();

/// Non-meta-learning reference methods over a fixed pool and DSEL.
class BaselineEnsemble {
 public:
  BaselineEnsemble(const ClassifierPool& pool, const DselCache& cache, std::size_t k);

  /// Scaled query. Throws for kMetaDesOracle and kOracle.
  int predict(Method method, std::span<const double> x) const;
  /// Same, with the query's member labels and K nearest DSEL rows supplied.
  int predict(Method method, std::span<const int> member_labels,
              std::span<const std::size_t> neighbors) const;

  const std::vector<double>& dsel_accuracy() const { return accuracy_; }
  std::size_t single_best() const { return single_best_; }
  const std::vector<std::size_t>& static_subset() const { return static_subset_; }

 private:
  const ClassifierPool* pool_;
  const DselCache* cache_;
  std::size_t k_;
  std::vector<double> accuracy_;
  std::size_t single_best_ = 0;
  std::vector<std::size_t> static_subset_;
};

int baseline_predict(Method method, const ClassifierPool& pool, const DselCache& cache,
                     std::span<const double> x, std::size_t k);

/// Fraction of test samples that at least one member classifies correctly.
double oracle_accuracy(const ClassifierPool& pool, const Dataset& test);

}  // namespace metades
