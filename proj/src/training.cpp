#include "metades/training.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include "metades/parallel.hpp"
#include "metades/random.hpp"

namespace metades {

MetaRows MetaDataset::to_rows() const {
  MetaRows out;
  out.dimension = dimension;
  out.values.reserve(rows.size() * dimension);
  out.labels.reserve(rows.size());
  for (const auto& r : rows) out.add(r.values, r.meta_label);
  return out;
}

MetaDataset build_meta_dataset(const MetaFeatureExtractor& extractor, const Dataset& samples,
                               bool from_dsel, double consensus_threshold, std::size_t threads) {
  const std::size_t M = extractor.pool().size();
  std::vector<std::vector<MetaFeatureVector>> per_sample(samples.size());
  parallel_for(
      samples.size(),
      [&](std::size_t j) {
        const auto exclude = from_dsel ? std::optional<std::size_t>(j) : std::nullopt;
        std::vector<int> labels;
        labels.reserve(M);
        for (const auto& m : extractor.pool().members()) {
          labels.push_back(m.predict(samples.row(j)).label);
        }
        if (!passes_consensus_filter(consensus(labels, samples.label(j)), consensus_threshold)) {
          return;
        }
        const auto query = extractor.prepare(samples.row(j), samples.label(j), exclude);
        auto& rows = per_sample[j];
        rows.reserve(M);
        for (std::size_t i = 0; i < M; ++i) rows.push_back(extractor.extract(query, i, j));
      },
      threads);

  MetaDataset out;
  out.dimension = extractor.layout().dimension();
  out.total_samples = samples.size();
  for (std::size_t j = 0; j < per_sample.size(); ++j) {
    if (per_sample[j].empty()) continue;
    out.kept_samples.push_back(j);
    for (auto& r : per_sample[j]) out.rows.push_back(std::move(r));
  }
  return out;
}

std::pair<MetaDataset, MetaDataset> split_by_sample(const MetaDataset& data, double fraction,
                                                    std::uint64_t seed) {
  auto ids = data.kept_samples;
  Rng rng(seed);
  shuffle(ids, rng);
  const auto first_count = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(ids.size())));
  const std::set<std::size_t> first_ids(ids.begin(),
                                        ids.begin() + static_cast<std::ptrdiff_t>(first_count));

  MetaDataset a;
  MetaDataset b;
  a.dimension = b.dimension = data.dimension;
  a.total_samples = b.total_samples = data.total_samples;
  for (std::size_t id : data.kept_samples) {
    (first_ids.contains(id) ? a : b).kept_samples.push_back(id);
  }
  for (const auto& r : data.rows) (first_ids.contains(r.sample_id) ? a : b).rows.push_back(r);
  return {std::move(a), std::move(b)};
}

void write_meta_dataset_csv(const std::filesystem::path& path, const MetaDataset& data,
                            const MetaFeatureLayout& layout) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t j = 0; j < layout.dimension(); ++j) out << layout.feature_name(j) << ',';
  out << "meta_label,classifier_index,sample_id\n";
  for (const auto& r : data.rows) {
    for (double v : r.values) out << v << ',';
    out << r.meta_label << ',' << r.classifier_index << ',' << r.sample_id << '\n';
  }
}

TrainingResult train_des_with_pool(ClassifierPool pool, ScaleParams scale,
                                   const Dataset& meta_train, const Dataset& dsel,
                                   const TrainConfig& config) {
  config.hyper.validate();
  auto bounds = fit_confidence_bounds(pool, dsel);
  const std::size_t D = MetaFeatureLayout(config.hyper.k, config.hyper.kp).dimension();
  DesModel model(std::move(pool), dsel, std::move(scale), std::move(bounds), FeatureMask::all(D),
                 MetaClassifier::zero(D), config.hyper, config.rrc);

  auto meta_rows = build_meta_dataset(model.extractor(), meta_train, false,
                                      config.hyper.consensus_threshold, config.threads);
  auto dsel_rows = build_meta_dataset(model.extractor(), dsel, true,
                                      config.hyper.consensus_threshold, config.threads);

  OptimizationResult optimization;
  FeatureMask mask = FeatureMask::all(D);
  if (config.select_features) {
    auto [fit_half, guide_half] =
        split_by_sample(meta_rows, config.meta_fit_fraction, derive_seed(config.seed, 0x5a));
    MetaSplit split{fit_half.to_rows(), guide_half.to_rows(), dsel_rows.to_rows()};
    if (split.train.size() >= 2 && split.optimization.size() > 0 && split.validation.size() > 0) {
      auto bpso = config.bpso;
      bpso.seed = derive_seed(config.seed, 0xb5);
      if (bpso.threads == 0) bpso.threads = config.threads;
      optimization = optimize(split, config.meta, bpso);
      mask = optimization.archive.mask;
    }
  }

  const auto all_rows = meta_rows.to_rows();
  MetaClassifier selector = all_rows.size() >= 2
                                ? train_meta(select_columns(all_rows, mask), config.meta)
                                : MetaClassifier::zero(mask.count());
  selector.set_mask_fingerprint(mask.to_string());
  model.set_selector(std::move(mask), std::move(selector));
  return {std::move(model), std::move(optimization), std::move(meta_rows), std::move(dsel_rows)};
}

TrainingResult train_des(const Dataset& train, const Dataset& meta_train, const Dataset& dsel,
                         const TrainConfig& config) {
  auto [scaled_train, scale] = scale_minmax(train);
  auto pool = bagging(scaled_train, config.bagging, derive_seed(config.seed, 0xba));
  return train_des_with_pool(std::move(pool), scale, scale.apply(meta_train), scale.apply(dsel),
                             config);
}

}  // namespace metades
