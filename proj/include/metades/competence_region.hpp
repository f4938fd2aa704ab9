#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "metades/dataset.hpp"
#include "metades/pool.hpp"

namespace metades {

/// K nearest DSEL rows of a query, ascending by distance (ties by index).
struct RegionOfCompetence {
  std::vector<std::size_t> neighbor_indices;
  std::vector<double> distances;
};

/// Concatenated support vectors of every pool member for one sample (M x L).
struct OutputProfile {
  std::vector<double> values;
};

struct ProfileNeighborhood {
  std::vector<std::size_t> neighbor_indices;
  std::vector<double> distances;
  std::vector<int> labels;
};

/// Indices of every row of `points` (row-major, `dim` columns) sorted by
/// Euclidean distance to `query`, ties by index; `exclude` is skipped.
/// Returns the distances alongside.
std::pair<std::vector<std::size_t>, std::vector<double>> rank_by_distance(
    std::span<const double> query, std::span<const double> points, std::size_t dim,
    std::optional<std::size_t> exclude = std::nullopt);

RegionOfCompetence region_of(std::span<const double> x, const Dataset& dsel, std::size_t k,
                             std::optional<std::size_t> exclude = std::nullopt);

OutputProfile output_profile(const ClassifierPool& pool, std::span<const double> x);

/// Pool outputs over DSEL, computed once and then read-only.
class DselCache {
 public:
  DselCache(const ClassifierPool& pool, Dataset dsel);

  const Dataset& dsel() const { return dsel_; }
  std::size_t size() const { return dsel_.size(); }
  std::size_t pool_size() const { return pool_size_; }
  std::size_t class_count() const { return class_count_; }

  int predicted(std::size_t member, std::size_t sample) const {
    return labels_[member * dsel_.size() + sample];
  }
  bool correct(std::size_t member, std::size_t sample) const {
    return predicted(member, sample) == dsel_.label(sample);
  }
  std::span<const double> supports(std::size_t member, std::size_t sample) const {
    return {supports_.data() + (member * dsel_.size() + sample) * class_count_, class_count_};
  }
  /// Flattened profiles, one row of M*L values per DSEL sample.
  std::span<const double> profiles() const { return profiles_; }
  std::span<const double> profile(std::size_t sample) const {
    const std::size_t width = pool_size_ * class_count_;
    return {profiles_.data() + sample * width, width};
  }
  std::size_t profile_width() const { return pool_size_ * class_count_; }

 private:
  Dataset dsel_;
  std::size_t pool_size_;
  std::size_t class_count_;
  std::vector<int> labels_;
  std::vector<double> supports_;
  std::vector<double> profiles_;
};

ProfileNeighborhood profile_neighborhood(const OutputProfile& query, const DselCache& cache,
                                         std::size_t kp,
                                         std::optional<std::size_t> exclude = std::nullopt);

}  // namespace metades
