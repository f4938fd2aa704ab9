#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "metades/bpso.hpp"
#include "metades/des.hpp"
#include "metades/meta_features.hpp"
#include "metades/pool.hpp"

namespace metades {

/// Meta-feature vectors for the samples of one set that passed the
/// consensus filter, sample-major then classifier-minor.
struct MetaDataset {
  std::size_t dimension = 0;
  std::vector<MetaFeatureVector> rows;
  std::vector<std::size_t> kept_samples;
  std::size_t total_samples = 0;

  MetaRows to_rows() const;
};

/// Extracts meta-data for every sample of `samples` (already scaled) whose
/// pool consensus is below h_c. `from_dsel` marks samples that are DSEL
/// rows themselves, so each is excluded from its own neighborhoods.
MetaDataset build_meta_dataset(const MetaFeatureExtractor& extractor, const Dataset& samples,
                               bool from_dsel, double consensus_threshold,
                               std::size_t threads = 0);

/// Splits by sample id: a seeded `fraction` of the kept samples, with all
/// of their rows, goes to the first half.
std::pair<MetaDataset, MetaDataset> split_by_sample(const MetaDataset& data, double fraction,
                                                    std::uint64_t seed);

void write_meta_dataset_csv(const std::filesystem::path& path, const MetaDataset& data,
                            const MetaFeatureLayout& layout);

struct TrainConfig {
  BaggingConfig bagging;
  DesHyperParams hyper;
  BpsoConfig bpso;
  MetaTrainConfig meta;
  RrcConfig rrc;
  // Fraction of the meta-training samples used to fit the selector during
  // the search; the rest guide it.
  double meta_fit_fraction = 0.5;
  bool select_features = true;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

struct TrainingResult {
  DesModel model;
  OptimizationResult optimization;
  MetaDataset meta_train;  // from the meta-training set
  MetaDataset dsel_meta;   // from DSEL (validation during the search)
};

/// Fits the scaling on `train`, bags the pool, builds the meta-data, runs
/// the mask search with global validation and trains the final selector on
/// all masked meta-training rows. Inputs are unscaled.
TrainingResult train_des(const Dataset& train, const Dataset& meta_train, const Dataset& dsel,
                         const TrainConfig& config);

/// Same, reusing a pool and scaling fitted elsewhere. Inputs are scaled.
TrainingResult train_des_with_pool(ClassifierPool pool, ScaleParams scale,
                                   const Dataset& meta_train, const Dataset& dsel,
                                   const TrainConfig& config);

}  // namespace metades
