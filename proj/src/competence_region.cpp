#include "metades/competence_region.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace metades {

std::pair<std::vector<std::size_t>, std::vector<double>> rank_by_distance(
    std::span<const double> query, std::span<const double> points, std::size_t dim,
    std::optional<std::size_t> exclude) {
  if (query.size() != dim) throw std::invalid_argument("query dimension mismatch");
  const std::size_t n = points.size() / dim;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double diff = points[i * dim + j] - query[j];
      acc += diff * diff;
    }
    d2[i] = acc;
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (exclude && *exclude == i) continue;
    order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d2[a] < d2[b]; });
  std::vector<double> dist(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) dist[r] = std::sqrt(d2[order[r]]);
  return {std::move(order), std::move(dist)};
}

namespace {

void check_k(std::size_t k, std::size_t n, bool excluding) {
  const std::size_t available = n - (excluding ? 1 : 0);
  if (k == 0 || k > available) {
    throw std::invalid_argument("neighborhood size " + std::to_string(k) + " not in [1, " +
                                std::to_string(available) + "]");
  }
}

}  // namespace

RegionOfCompetence region_of(std::span<const double> x, const Dataset& dsel, std::size_t k,
                             std::optional<std::size_t> exclude) {
  check_k(k, dsel.size(), exclude.has_value());
  auto [order, dist] = rank_by_distance(x, dsel.values(), dsel.feature_count(), exclude);
  order.resize(k);
  dist.resize(k);
  return {std::move(order), std::move(dist)};
}

OutputProfile output_profile(const ClassifierPool& pool, std::span<const double> x) {
  OutputProfile profile;
  profile.values.reserve(pool.size() * pool.class_count());
  for (const auto& member : pool.members()) {
    const auto p = member.predict(x);
    profile.values.insert(profile.values.end(), p.supports.begin(), p.supports.end());
  }
  return profile;
}

DselCache::DselCache(const ClassifierPool& pool, Dataset dsel)
    : dsel_(std::move(dsel)), pool_size_(pool.size()), class_count_(pool.class_count()) {
  if (dsel_.empty()) throw std::invalid_argument("DSEL must not be empty");
  if (dsel_.feature_count() != pool.feature_count()) {
    throw std::invalid_argument("DSEL and pool disagree on feature count");
  }
  const std::size_t n = dsel_.size();
  labels_.resize(pool_size_ * n);
  supports_.resize(pool_size_ * n * class_count_);
  profiles_.resize(n * pool_size_ * class_count_);
  for (std::size_t m = 0; m < pool_size_; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = pool[m].predict(dsel_.row(i));
      labels_[m * n + i] = p.label;
      std::copy(p.supports.begin(), p.supports.end(),
                supports_.begin() + static_cast<std::ptrdiff_t>((m * n + i) * class_count_));
      std::copy(p.supports.begin(), p.supports.end(),
                profiles_.begin() +
                    static_cast<std::ptrdiff_t>(i * pool_size_ * class_count_ + m * class_count_));
    }
  }
}

ProfileNeighborhood profile_neighborhood(const OutputProfile& query, const DselCache& cache,
                                         std::size_t kp, std::optional<std::size_t> exclude) {
  check_k(kp, cache.size(), exclude.has_value());
  auto [order, dist] = rank_by_distance(query.values, cache.profiles(), cache.profile_width(),
                                        exclude);
  order.resize(kp);
  dist.resize(kp);
  ProfileNeighborhood nb;
  nb.labels.reserve(kp);
  for (std::size_t i : order) nb.labels.push_back(cache.dsel().label(i));
  nb.neighbor_indices = std::move(order);
  nb.distances = std::move(dist);
  return nb;
}

}  // namespace metades
