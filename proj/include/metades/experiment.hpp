#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "metades/dataset.hpp"
#include "metades/des.hpp"
#include "metades/training.hpp"

namespace metades {

struct P2Sizes {
  std::size_t train = 500;
  std::size_t meta_train = 500;
  std::size_t dsel = 500;
  std::size_t test = 2000;
};

struct DatasetSource {
  // Exactly one of csv_path / p2 is used; p2 takes the generated sizes.
  std::optional<std::filesystem::path> csv_path;
  int label_column = -1;
  std::optional<P2Sizes> p2;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSource source;
  SplitSpec split;
  TrainConfig train;
  std::size_t replications = 20;
  std::vector<Method> methods = all_methods();
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  void validate() const;
};

/// Reads a JSON config; unknown keys are rejected, missing keys keep the
/// defaults above. Relative csv paths resolve against the config's folder.
ExperimentConfig parse_experiment_config(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ReplicationResult {
  std::vector<double> accuracy;  // one per method; NaN when the cell is missing
  std::optional<FeatureMask> mask;
  std::vector<TraceRow> trace;
  std::string error;  // empty on success
  double fallback_rate = 0.0;
  std::size_t meta_rows = 0;
};

struct MethodSummary {
  Method method = Method::kMetaDesOracle;
  double mean = 0.0;
  double stddev = 0.0;
  double average_rank = 0.0;
  std::size_t wins = 0;
  std::size_t ties = 0;
  std::size_t losses = 0;
  std::size_t valid = 0;
};

struct FrequencyReport {
  std::vector<double> per_feature;
  std::vector<double> per_set;  // indexed by FeatureSet
  std::size_t masks = 0;
};

/// Fig. 4 shading: <25% white, [25,50) light grey, [50,75) dark grey,
/// >=75% black.
std::string frequency_band(double frequency);

/// Per-bit mean over the masks, and for each of the 15 sets the mean over
/// its member bits.
FrequencyReport frequency_report(const std::vector<FeatureMask>& masks,
                                 const MetaFeatureLayout& layout);

struct RunReport {
  std::string name;
  std::vector<Method> methods;
  std::vector<ReplicationResult> replications;
  std::vector<MethodSummary> summary;
  Method reference = Method::kMetaDesOracle;
  std::optional<FrequencyReport> frequencies;
  std::size_t dimension = 0;
  std::size_t k = 0;
  std::size_t kp = 0;
};

/// Mean ranks (1 = most accurate, ties share the mean rank) of one row.
std::vector<double> rank_row(const std::vector<double>& accuracy);

/// Aggregates per-replication accuracies: mean, sample stddev, average rank
/// over rows with no missing cells, win-tie-loss against `reference`.
std::vector<MethodSummary> summarize(const std::vector<Method>& methods,
                                     const std::vector<ReplicationResult>& rows, Method reference);

/// Data for one replication, already split; exposed for tests.
struct ReplicationData {
  Dataset train;
  Dataset meta_train;
  Dataset dsel;
  Dataset test;
};
ReplicationData make_replication_data(const ExperimentConfig& config, const Dataset* loaded,
                                      std::size_t replication);

/// Accuracy of `method` on the scaled test set, using the trained model's
/// pool and DSEL.
double method_accuracy(Method method, const DesModel& model, const Dataset& scaled_test,
                       double* fallback_rate = nullptr);

RunReport run_experiment(const ExperimentConfig& config);

/// accuracy.csv, summary.csv, frequencies.csv, feature_sets.csv,
/// trace.csv and summary.txt under `dir`. Numbers use fixed formatting so
/// identical reports are byte-identical.
void write_report(const RunReport& report, const std::filesystem::path& dir);

struct PredictionRow {
  std::size_t sample_id = 0;
  int true_label = 0;
  int predicted = 0;
  Method method = Method::kMetaDesOracle;
  bool fallback = false;
  std::size_t selected = 0;
};

void write_predictions_csv(const std::filesystem::path& path, const std::vector<PredictionRow>& rows,
                           const std::vector<std::string>& class_names);

}  // namespace metades
