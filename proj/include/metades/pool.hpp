#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "metades/dataset.hpp"

namespace metades {

struct PerceptronConfig {
  std::size_t epochs = 100;
  double learning_rate = 0.01;
  // Scale of the logistic squash applied to normalized boundary distances.
  double support_gain = 10.0;
};

struct Prediction {
  int label = 0;
  std::vector<double> supports;
};

/// Linear perceptron with one weight row per class, each row laid out as
/// [w_0 .. w_{d-1}, bias]. Two-class models keep a single hyperplane h as
/// rows (-h, h); multi-class models train one-vs-all rows.
class Perceptron {
 public:
  Perceptron() = default;
  Perceptron(std::size_t feature_count, std::size_t class_count, std::vector<double> weights,
             double support_gain, bool trained);

  std::size_t feature_count() const { return feature_count_; }
  std::size_t class_count() const { return class_count_; }
  bool trained() const { return trained_; }
  double support_gain() const { return support_gain_; }
  const std::vector<double>& weights() const { return weights_; }
  std::span<const double> weight_row(std::size_t cls) const {
    return {weights_.data() + cls * (feature_count_ + 1), feature_count_ + 1};
  }

  /// Signed distance of x to each class hyperplane, divided by the diameter
  /// of the unit cube (sqrt(d)) so values on scaled data lie near [-1, 1].
  std::vector<double> normalized_scores(std::span<const double> x) const;

  /// Label = argmax of supports (lowest index on ties). Supports are
  /// softmax(gain * normalized_scores); for two classes this is the logistic
  /// squash of the signed distance to the single boundary.
  Prediction predict(std::span<const double> x) const;

  /// Distance from x to the boundary of its predicted class, in the same
  /// normalized units: gap between the top and runner-up normalized scores.
  double boundary_distance(std::span<const double> x) const;

 private:
  void check_dimension(std::span<const double> x) const;

  std::size_t feature_count_ = 0;
  std::size_t class_count_ = 0;
  std::vector<double> weights_;
  double support_gain_ = 10.0;
  bool trained_ = false;
};

/// Standard perceptron updates on misclassified samples, visiting samples in
/// a seed-driven shuffled order each epoch. Weights start uniform in
/// [-lr, lr]; zero epochs returns that initialization.
Perceptron train_perceptron(const Dataset& ds, const PerceptronConfig& config, std::uint64_t seed);

class ClassifierPool {
 public:
  ClassifierPool() = default;
  explicit ClassifierPool(std::vector<Perceptron> members);

  std::size_t size() const { return members_.size(); }
  const Perceptron& operator[](std::size_t i) const { return members_[i]; }
  const std::vector<Perceptron>& members() const { return members_; }
  std::size_t feature_count() const { return members_.front().feature_count(); }
  std::size_t class_count() const { return members_.front().class_count(); }

  /// First `m` members, as if generated with a pool size of m.
  ClassifierPool prefix(std::size_t m) const;

 private:
  std::vector<Perceptron> members_;
};

struct BaggingConfig {
  std::size_t pool_size = 100;
  double bootstrap_frac = 0.5;
  PerceptronConfig perceptron;
  std::size_t max_resamples = 10;
};

/// Seed used for member i of a bagging run.
std::uint64_t member_seed(std::uint64_t seed, std::size_t member);

/// With-replacement sample of ceil(frac * n) row indices, redrawn while it
/// misses a class (bounded by max_resamples, then std::runtime_error).
std::vector<std::size_t> bootstrap_indices(const Dataset& ds, double frac, std::uint64_t seed,
                                           std::size_t max_resamples = 10);

ClassifierPool bagging(const Dataset& ds, const BaggingConfig& config, std::uint64_t seed);

}  // namespace metades
