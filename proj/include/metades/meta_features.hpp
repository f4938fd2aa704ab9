#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metades/competence_region.hpp"
#include "metades/pool.hpp"

namespace metades {

/// The fifteen criteria, in the order they occupy the meta-feature vector.
enum class FeatureSet : std::uint8_t {
  kHard,
  kProb,
  kOverall,
  kCond,
  kConf,
  kAmb,
  kLog,
  kPrc,
  kMinDiff,
  kEntropy,
  kExp,
  kKullbackLeibler,
  kOutputProfile,
  kRank,
  kRankOutputProfile,
};

inline constexpr std::size_t kFeatureSetCount = 15;

std::string_view feature_set_name(FeatureSet set);

/// Fixed segment layout of a meta-feature vector for given K and Kp.
/// D = 8K + Kp + 6.
class MetaFeatureLayout {
 public:
  MetaFeatureLayout(std::size_t k, std::size_t kp);

  std::size_t k() const { return k_; }
  std::size_t kp() const { return kp_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t offset(FeatureSet set) const { return offsets_[static_cast<std::size_t>(set)]; }
  std::size_t width(FeatureSet set) const;
  FeatureSet set_of(std::size_t index) const;
  /// Column label, e.g. "f_Hard_3" or "f_Conf".
  std::string feature_name(std::size_t index) const;

 private:
  std::size_t k_;
  std::size_t kp_;
  std::size_t dimension_;
  std::array<std::size_t, kFeatureSetCount> offsets_{};
};

/// Binary selection over meta-features.
class FeatureMask {
 public:
  FeatureMask() = default;
  explicit FeatureMask(std::vector<std::uint8_t> bits);
  static FeatureMask all(std::size_t dimension);
  static FeatureMask none(std::size_t dimension);
  /// Parses a string of '0'/'1' characters.
  static FeatureMask parse(std::string_view bits);

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool on) { bits_[i] = on ? 1 : 0; }
  void flip(std::size_t i) { bits_[i] ^= 1; }
  std::size_t count() const;
  bool any() const { return count() > 0; }
  std::string to_string() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const FeatureMask&, const FeatureMask&) = default;
  friend auto operator<=>(const FeatureMask&, const FeatureMask&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Entries of `values` whose mask bit is set, in order. Throws on a length
/// mismatch or an empty mask.
std::vector<double> apply_mask(std::span<const double> values, const FeatureMask& mask);

struct MetaFeatureVector {
  std::vector<double> values;
  int meta_label = -1;  // 1 competent, 0 incompetent, -1 unknown
  std::size_t classifier_index = 0;
  std::size_t sample_id = 0;
};

// Per-criterion scalar definitions over one support vector. Supports are
// clamped to [1e-12, 1 - 1e-9] wherever they feed a logarithm or a ratio.
namespace criteria {

inline constexpr double kSupportFloor = 1e-12;
inline constexpr double kSupportCeil = 1.0 - 1e-9;

/// Top support minus runner-up support.
double ambiguity(std::span<const double> supports);
/// 2 * s^(log 2 / log L) - 1.
double logarithmic(double correct_support, std::size_t class_count);
/// 1 - 2^(-(L-1) * s / (1 - s)).
double exponential(double correct_support, std::size_t class_count);
/// -sum s log s.
double entropy(std::span<const double> supports);
/// sum s log(s / (1/L)).
double kl_from_uniform(std::span<const double> supports);
/// min over l != correct of (s_l - s_correct).
double minimal_difference(std::span<const double> supports, std::size_t correct);

}  // namespace criteria

struct RrcConfig {
  std::size_t samples = 1000;
  double concentration = 10.0;
  std::uint64_t seed = 0x5eed;
};

/// Monte-Carlo probability that a randomized reference classifier whose
/// class supports are Beta draws with means `supports` ranks
/// `correct_class` first.
double rrc_competence(std::span<const double> supports, std::size_t correct_class,
                      std::size_t samples, std::uint64_t seed, double concentration = 10.0);

/// Per-classifier range of boundary distances over DSEL, used to map
/// f_Conf onto [0, 1].
struct ConfidenceBounds {
  std::vector<double> min;
  std::vector<double> max;
  double normalize(std::size_t member, double distance) const;
};

ConfidenceBounds fit_confidence_bounds(const ClassifierPool& pool, const Dataset& dsel);

/// Everything about one query that is shared by all pool members.
struct QueryContext {
  std::vector<double> x;
  std::optional<int> true_label;
  std::vector<std::size_t> dsel_order;  // every DSEL row by distance to x
  RegionOfCompetence region;
  OutputProfile profile;
  ProfileNeighborhood profile_neighbors;
  std::vector<Prediction> predictions;  // one per pool member
};

/// Extracts meta-feature vectors against a fixed pool and DSEL. Holds a
/// cache of RRC probabilities for every (member, DSEL sample) pair.
class MetaFeatureExtractor {
 public:
  MetaFeatureExtractor(const ClassifierPool& pool, const DselCache& cache, std::size_t k,
                       std::size_t kp, ConfidenceBounds bounds, RrcConfig rrc = {});

  const MetaFeatureLayout& layout() const { return layout_; }
  const ClassifierPool& pool() const { return *pool_; }
  const DselCache& cache() const { return *cache_; }
  const ConfidenceBounds& bounds() const { return bounds_; }

  /// `exclude` drops the query's own row when it comes from DSEL.
  QueryContext prepare(std::span<const double> x, std::optional<int> true_label,
                       std::optional<std::size_t> exclude = std::nullopt) const;

  MetaFeatureVector extract(const QueryContext& query, std::size_t member,
                            std::size_t sample_id = 0) const;

  double rrc(std::size_t member, std::size_t dsel_sample) const {
    return rrc_[member * cache_->size() + dsel_sample];
  }

 private:
  const ClassifierPool* pool_;
  const DselCache* cache_;
  MetaFeatureLayout layout_;
  ConfidenceBounds bounds_;
  std::vector<double> rrc_;
};

}  // namespace metades
