#include "metades/pool.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "metades/random.hpp"

namespace metades {

Perceptron::Perceptron(std::size_t feature_count, std::size_t class_count,
                       std::vector<double> weights, double support_gain, bool trained)
    : feature_count_(feature_count),
      class_count_(class_count),
      weights_(std::move(weights)),
      support_gain_(support_gain),
      trained_(trained) {
  if (class_count_ < 2) throw std::invalid_argument("perceptron needs at least two classes");
  if (weights_.size() != class_count_ * (feature_count_ + 1)) {
    throw std::invalid_argument("perceptron weight matrix has the wrong shape");
  }
  for (double w : weights_) {
    if (!std::isfinite(w)) throw std::invalid_argument("perceptron weights must be finite");
  }
}

void Perceptron::check_dimension(std::span<const double> x) const {
  if (x.size() != feature_count_) {
    throw std::invalid_argument("perceptron expects " + std::to_string(feature_count_) +
                                " features, got " + std::to_string(x.size()));
  }
}

std::vector<double> Perceptron::normalized_scores(std::span<const double> x) const {
  check_dimension(x);
  const double diameter = std::sqrt(static_cast<double>(feature_count_));
  std::vector<double> z(class_count_);
  for (std::size_t c = 0; c < class_count_; ++c) {
    const auto w = weight_row(c);
    double score = w[feature_count_];
    double norm2 = 0.0;
    for (std::size_t j = 0; j < feature_count_; ++j) {
      score += w[j] * x[j];
      norm2 += w[j] * w[j];
    }
    const double norm = std::sqrt(norm2);
    if (norm > 0.0) {
      z[c] = score / (norm * diameter);
    } else {
      // Degenerate row: constant decision given by the bias sign.
      z[c] = score > 0.0 ? 1.0 : (score < 0.0 ? -1.0 : 0.0);
    }
  }
  return z;
}

Prediction Perceptron::predict(std::span<const double> x) const {
  const auto z = normalized_scores(x);
  Prediction p;
  p.supports.resize(class_count_);
  const double top = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (std::size_t c = 0; c < class_count_; ++c) {
    p.supports[c] = std::exp(support_gain_ * (z[c] - top));
    total += p.supports[c];
  }
  for (auto& s : p.supports) s /= total;
  p.label = static_cast<int>(std::max_element(p.supports.begin(), p.supports.end()) -
                             p.supports.begin());
  return p;
}

double Perceptron::boundary_distance(std::span<const double> x) const {
  auto z = normalized_scores(x);
  std::partial_sort(z.begin(), z.begin() + 2, z.end(), std::greater<>());
  return z[0] - z[1];
}

Perceptron train_perceptron(const Dataset& ds, const PerceptronConfig& config,
                            std::uint64_t seed) {
  if (ds.empty()) throw std::invalid_argument("train_perceptron: empty dataset");
  const std::size_t d = ds.feature_count();
  const std::size_t L = ds.class_count();
  const double lr = config.learning_rate;
  Rng rng(seed);

  // Hyperplanes to train: one for the two-class case, one per class otherwise.
  const std::size_t planes = L == 2 ? 1 : L;
  std::vector<std::vector<double>> h(planes, std::vector<double>(d + 1));
  for (auto& plane : h) {
    for (auto& w : plane) w = uniform(rng, -lr, lr);
  }

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t i : order) {
      const auto x = ds.row(i);
      for (std::size_t p = 0; p < planes; ++p) {
        const int positive = L == 2 ? 1 : static_cast<int>(p);
        const double target = ds.label(i) == positive ? 1.0 : -1.0;
        auto& w = h[p];
        double score = w[d];
        for (std::size_t j = 0; j < d; ++j) score += w[j] * x[j];
        if (target * score > 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) w[j] += lr * target * x[j];
        w[d] += lr * target;
      }
    }
  }

  std::vector<double> weights;
  weights.reserve(L * (d + 1));
  if (L == 2) {
    for (double w : h[0]) weights.push_back(-w);
    weights.insert(weights.end(), h[0].begin(), h[0].end());
  } else {
    for (const auto& plane : h) weights.insert(weights.end(), plane.begin(), plane.end());
  }
  return Perceptron(d, L, std::move(weights), config.support_gain, true);
}

ClassifierPool::ClassifierPool(std::vector<Perceptron> members) : members_(std::move(members)) {
  if (members_.empty()) throw std::invalid_argument("classifier pool must not be empty");
  for (const auto& m : members_) {
    if (m.feature_count() != members_.front().feature_count() ||
        m.class_count() != members_.front().class_count()) {
      throw std::invalid_argument("pool members disagree on feature or class count");
    }
  }
}

ClassifierPool ClassifierPool::prefix(std::size_t m) const {
  if (m == 0 || m > members_.size()) throw std::out_of_range("pool prefix size out of range");
  return ClassifierPool({members_.begin(), members_.begin() + static_cast<std::ptrdiff_t>(m)});
}

std::uint64_t member_seed(std::uint64_t seed, std::size_t member) {
  return derive_seed(seed, member);
}

std::vector<std::size_t> bootstrap_indices(const Dataset& ds, double frac, std::uint64_t seed,
                                           std::size_t max_resamples) {
  if (!(frac > 0.0 && frac <= 1.0)) throw std::invalid_argument("bootstrap_frac must be in (0, 1]");
  const auto n = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(ds.size()) - 1e-9));
  Rng rng(seed);
  for (std::size_t attempt = 0; attempt <= max_resamples; ++attempt) {
    std::vector<std::size_t> idx(n);
    std::vector<bool> seen(ds.class_count(), false);
    for (auto& i : idx) {
      i = uniform_index(rng, ds.size());
      seen[static_cast<std::size_t>(ds.label(i))] = true;
    }
    if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) return idx;
  }
  throw std::runtime_error("bootstrap sample kept missing a class after " +
                           std::to_string(max_resamples) + " resamples");
}

ClassifierPool bagging(const Dataset& ds, const BaggingConfig& config, std::uint64_t seed) {
  if (config.pool_size == 0) throw std::invalid_argument("pool size must be at least 1");
  std::vector<Perceptron> members;
  members.reserve(config.pool_size);
  for (std::size_t m = 0; m < config.pool_size; ++m) {
    const auto s = member_seed(seed, m);
    const auto idx = bootstrap_indices(ds, config.bootstrap_frac, derive_seed(s, 0),
                                       config.max_resamples);
    members.push_back(train_perceptron(ds.subset(idx), config.perceptron, derive_seed(s, 1)));
  }
  return ClassifierPool(std::move(members));
}

}  // namespace metades
