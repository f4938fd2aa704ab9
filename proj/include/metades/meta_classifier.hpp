#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace metades {

/// Dense row-major table of (masked) meta-feature vectors with 0/1 labels.
struct MetaRows {
  std::size_t dimension = 0;
  std::vector<double> values;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * dimension, dimension};
  }
  void add(std::span<const double> row, int label);
};

struct MetaTrainConfig {
  double l2 = 1e-3;
  std::size_t max_iterations = 100;
  double tolerance = 1e-10;
  // Weight of competent rows relative to incompetent ones.
  double positive_weight = 1.0;
};

/// L2-regularized logistic model over standardized inputs. Training is a
/// damped Newton solve of a strictly convex objective, so the result does
/// not depend on row order.
class MetaClassifier {
 public:
  MetaClassifier() = default;
  MetaClassifier(std::vector<double> weights, double bias, std::vector<double> mean,
                 std::vector<double> scale, std::string mask_fingerprint, bool degenerate,
                 std::size_t iterations);

  /// Competence support in [0, 1]. Throws std::invalid_argument when the
  /// input length differs from the trained dimension.
  double competence(std::span<const double> v) const;
  /// Competence for every row of `rows`.
  std::vector<double> competence(const MetaRows& rows) const;

  std::size_t dimension() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& scale() const { return scale_; }
  const std::string& mask_fingerprint() const { return mask_fingerprint_; }
  void set_mask_fingerprint(std::string fp) { mask_fingerprint_ = std::move(fp); }
  /// Set when the training rows held a single meta-class; the model then
  /// outputs that class constantly.
  bool degenerate() const { return degenerate_; }
  std::size_t iterations() const { return iterations_; }

  /// All-zero weights and bias: competence 0.5 everywhere.
  static MetaClassifier zero(std::size_t dimension);

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
  std::vector<double> mean_;
  std::vector<double> scale_;
  std::string mask_fingerprint_;
  bool degenerate_ = false;
  std::size_t iterations_ = 0;
};

/// Throws std::invalid_argument for fewer than two rows.
MetaClassifier train_meta(const MetaRows& rows, const MetaTrainConfig& config = {});

}  // namespace metades
