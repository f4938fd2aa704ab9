#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace metades {

/// Row-major table of finite features with integer class labels in [0, L).
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t feature_count, std::size_t class_count);

  /// Appends one sample; throws std::invalid_argument on a dimension
  /// mismatch, a non-finite value or an out-of-range label.
  void add(std::span<const double> features, int label);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t feature_count() const { return feature_count_; }
  std::size_t class_count() const { return class_count_; }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * feature_count_, feature_count_};
  }
  std::span<double> mutable_row(std::size_t i) {
    return {features_.data() + i * feature_count_, feature_count_};
  }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<double>& values() const { return features_; }

  /// Original class symbols, index = encoded label. May be empty for
  /// generated data.
  const std::vector<std::string>& class_names() const { return class_names_; }
  void set_class_names(std::vector<std::string> names);

  /// Samples with the given row indices, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;

  std::vector<std::size_t> class_counts() const;

 private:
  std::size_t feature_count_ = 0;
  std::size_t class_count_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
  std::vector<std::string> class_names_;
};

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a comma-separated file. A header row is detected when the first
/// row has a non-numeric feature cell. A negative label_column counts from
/// the end (-1 is the last column). Labels are re-encoded 0..L-1 in order
/// of first appearance.
Dataset load_csv(const std::filesystem::path& path, int label_column = -1);

/// Same as load_csv, but class symbols are mapped through a fixed list
/// (used when scoring new data against a saved model). Unknown symbols are
/// an error.
Dataset load_csv_with_classes(const std::filesystem::path& path, int label_column,
                              const std::vector<std::string>& class_names);

void write_csv(const std::filesystem::path& path, const Dataset& ds);

struct SplitSpec {
  double train_frac = 0.5;
  double dsel_frac = 0.25;
  double test_frac = 0.25;
  double meta_frac_of_train = 0.25;
  std::uint64_t seed = 0;

  void validate() const;
};

struct HoldoutSplit {
  Dataset train;
  Dataset meta_train;
  Dataset dsel;
  Dataset test;
  // Row indices into the source dataset, one list per split.
  std::array<std::vector<std::size_t>, 4> indices;
};

/// Stratified holdout. Per class, split sizes come from largest-remainder
/// rounding with ties broken toward the split furthest below its global
/// target, so the overall sizes also match the requested fractions.
HoldoutSplit split_holdout(const Dataset& ds, const SplitSpec& spec);

/// Per-column affine map onto [0, 1].
struct ScaleParams {
  std::vector<double> min;
  std::vector<double> max;

  double apply(std::size_t column, double value) const;
  Dataset apply(const Dataset& ds) const;
  std::vector<double> apply(std::span<const double> x) const;
};

ScaleParams fit_minmax(const Dataset& ds);

/// Fits ScaleParams on `ds` and returns the scaled copy. Constant columns
/// map to 0.5; values outside the fitted range are clamped.
std::pair<Dataset, ScaleParams> scale_minmax(const Dataset& ds);

namespace p2 {

double boundary1(double x);
double boundary2(double x);
double boundary3(double x);
double boundary4(double x);

/// Class of a point in [0, 10]^2: parity of the number of boundary curves
/// the point lies above. Region I (below every curve) is class 0.
int label_of(double x, double y);

}  // namespace p2

/// P2 two-class problem on [0, 10]^2 (unscaled). Points are drawn uniformly
/// over the square and accepted until each class holds its share
/// (ceil(n/2) of class 0, floor(n/2) of class 1).
Dataset generate_p2(std::size_t n, std::uint64_t seed);

}  // namespace metades
