#include "metades/des.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace metades {

void DesHyperParams::validate() const {
  if (k == 0 || kp == 0) throw std::invalid_argument("K and Kp must be at least 1");
  if (!(consensus_threshold > 0.0 && consensus_threshold <= 1.0)) {
    throw std::invalid_argument("consensus threshold must lie in (0, 1]");
  }
  if (!(selection_threshold >= 0.0 && selection_threshold < 1.0)) {
    throw std::invalid_argument("selection threshold must lie in [0, 1)");
  }
}

double consensus(std::span<const int> member_labels, int true_label) {
  if (member_labels.empty()) throw std::invalid_argument("consensus of an empty pool");
  const auto hits = std::count(member_labels.begin(), member_labels.end(), true_label);
  return static_cast<double>(hits) / static_cast<double>(member_labels.size());
}

double consensus(const ClassifierPool& pool, std::span<const double> x, int true_label) {
  std::vector<int> labels;
  labels.reserve(pool.size());
  for (const auto& m : pool.members()) labels.push_back(m.predict(x).label);
  return consensus(labels, true_label);
}

int weighted_majority_vote(std::span<const int> labels, std::span<const double> weights,
                           std::size_t class_count) {
  if (labels.size() != weights.size()) throw std::invalid_argument("vote: size mismatch");
  if (labels.empty()) throw std::invalid_argument("vote: no voters");
  std::vector<double> total(class_count, 0.0);
  std::vector<std::size_t> count(class_count, 0);
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto l = static_cast<std::size_t>(labels[i]);
    total[l] += weights[i];
    ++count[l];
    sum += weights[i];
  }
  if (!(sum > 0.0)) {
    for (std::size_t l = 0; l < class_count; ++l) total[l] = static_cast<double>(count[l]);
  }
  int best = -1;
  for (std::size_t l = 0; l < class_count; ++l) {
    if (count[l] == 0) continue;
    if (best < 0 || total[l] > total[static_cast<std::size_t>(best)]) best = static_cast<int>(l);
  }
  return best;
}

int majority_vote(std::span<const int> labels, std::size_t class_count) {
  const std::vector<double> ones(labels.size(), 1.0);
  return weighted_majority_vote(labels, ones, class_count);
}

// ---------------------------------------------------------------------------

DesModel::DesModel(ClassifierPool pool, Dataset dsel, ScaleParams scale, ConfidenceBounds bounds,
                   FeatureMask mask, MetaClassifier meta, DesHyperParams hyper, RrcConfig rrc)
    : pool_(std::make_unique<ClassifierPool>(std::move(pool))),
      scale_(std::move(scale)),
      mask_(std::move(mask)),
      meta_(std::move(meta)),
      hyper_(hyper),
      rrc_(rrc) {
  hyper_.validate();
  class_names_ = dsel.class_names();
  cache_ = std::make_unique<DselCache>(*pool_, std::move(dsel));
  extractor_ = std::make_unique<MetaFeatureExtractor>(*pool_, *cache_, hyper_.k, hyper_.kp,
                                                      std::move(bounds), rrc_);
  set_selector(std::move(mask_), std::move(meta_));
}

void DesModel::set_selector(FeatureMask mask, MetaClassifier meta) {
  if (mask.size() != extractor_->layout().dimension()) {
    throw std::invalid_argument("mask length does not match the meta-feature dimension");
  }
  if (!mask.any()) throw std::invalid_argument("mask selects no meta-feature");
  if (meta.dimension() != mask.count()) {
    throw std::invalid_argument("meta-classifier input size does not match the mask");
  }
  mask_ = std::move(mask);
  meta_ = std::move(meta);
}

Classification combine(std::span<const int> member_labels, std::span<const double> competences,
                       double threshold, std::size_t class_count) {
  Classification c;
  c.competences.assign(competences.begin(), competences.end());
  std::vector<int> labels;
  std::vector<double> weights;
  for (std::size_t i = 0; i < competences.size(); ++i) {
    if (competences[i] >= threshold) {
      c.selected.push_back(i);
      labels.push_back(member_labels[i]);
      weights.push_back(competences[i]);
    }
  }
  if (c.selected.empty()) {
    const auto best = static_cast<std::size_t>(
        std::max_element(competences.begin(), competences.end()) - competences.begin());
    c.fallback = true;
    c.label = member_labels[best];
    return c;
  }
  c.label = weighted_majority_vote(labels, weights, class_count);
  return c;
}

Classification classify_scaled(const DesModel& model, std::span<const double> x) {
  const auto& ex = model.extractor();
  const auto query = ex.prepare(x, std::nullopt);
  std::vector<int> labels;
  std::vector<double> deltas;
  labels.reserve(model.pool().size());
  deltas.reserve(model.pool().size());
  for (std::size_t i = 0; i < model.pool().size(); ++i) {
    const auto v = ex.extract(query, i);
    deltas.push_back(model.meta().competence(apply_mask(v.values, model.mask())));
    labels.push_back(query.predictions[i].label);
  }
  return combine(labels, deltas, model.hyper().selection_threshold, model.pool().class_count());
}

Classification classify(const DesModel& model, std::span<const double> raw_x) {
  const auto x = model.scale().apply(raw_x);
  return classify_scaled(model, x);
}

// ---------------------------------------------------------------------------

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kMetaDesOracle: return "META-DES.Oracle";
    case Method::kOracle: return "Oracle";
    case Method::kOla: return "OLA";
    case Method::kLca: return "LCA";
    case Method::kKnoraE: return "KNORA-E";
    case Method::kKnoraU: return "KNORA-U";
    case Method::kSingleBest: return "Single-Best";
    case Method::kStaticSelection: return "Static-Selection";
    case Method::kMajorityVote: return "Majority-Vote";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string key;
  for (char c : name) {
    if (c == '-' || c == '_' || c == '.' || c == ' ') continue;
    key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  for (auto m : all_methods()) {
    std::string candidate;
    for (char c : method_name(m)) {
      if (c == '-' || c == '_' || c == '.' || c == ' ') continue;
      candidate.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    if (candidate == key) return m;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

std::vector<Method> all_methods() {
  return {Method::kMetaDesOracle, Method::kOracle,      Method::kOla,
          Method::kLca,           Method::kKnoraE,      Method::kKnoraU,
          Method::kSingleBest,    Method::kStaticSelection, Method::kMajorityVote};
}

BaselineEnsemble::BaselineEnsemble(const ClassifierPool& pool, const DselCache& cache,
                                   std::size_t k)
    : pool_(&pool), cache_(&cache), k_(k) {
  if (k == 0 || k > cache.size()) throw std::invalid_argument("baseline k out of range");
  const std::size_t M = pool.size();
  accuracy_.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < cache.size(); ++i) hits += cache.correct(m, i);
    accuracy_[m] = static_cast<double>(hits) / static_cast<double>(cache.size());
  }
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return accuracy_[a] > accuracy_[b]; });
  single_best_ = order.front();
  static_subset_.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>((M + 1) / 2));
  std::sort(static_subset_.begin(), static_subset_.end());
}

int BaselineEnsemble::predict(Method method, std::span<const double> x) const {
  std::vector<int> labels;
  labels.reserve(pool_->size());
  for (const auto& m : pool_->members()) labels.push_back(m.predict(x).label);
  const auto region = region_of(x, cache_->dsel(), k_);
  return predict(method, labels, region.neighbor_indices);
}

int BaselineEnsemble::predict(Method method, std::span<const int> labels,
                              std::span<const std::size_t> neighbors) const {
  const std::size_t M = pool_->size();
  const std::size_t L = pool_->class_count();
  const auto& dsel = cache_->dsel();
  auto argmax_member = [&](const std::vector<double>& score) {
    return static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
  };

  switch (method) {
    case Method::kOla: {
      std::vector<double> score(M, 0.0);
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t idx : neighbors) score[m] += cache_->correct(m, idx);
        score[m] /= static_cast<double>(neighbors.size());
      }
      return labels[argmax_member(score)];
    }
    case Method::kLca: {
      std::vector<double> score(M, 0.0);
      for (std::size_t m = 0; m < M; ++m) {
        std::size_t assigned = 0;
        std::size_t hits = 0;
        for (std::size_t idx : neighbors) {
          if (cache_->predicted(m, idx) != labels[m]) continue;
          ++assigned;
          hits += dsel.label(idx) == labels[m];
        }
        score[m] = assigned ? static_cast<double>(hits) / static_cast<double>(assigned) : 0.0;
      }
      return labels[argmax_member(score)];
    }
    case Method::kKnoraE: {
      for (std::size_t kk = neighbors.size(); kk >= 1; --kk) {
        std::vector<int> chosen;
        for (std::size_t m = 0; m < M; ++m) {
          bool all = true;
          for (std::size_t r = 0; r < kk && all; ++r) all = cache_->correct(m, neighbors[r]);
          if (all) chosen.push_back(labels[m]);
        }
        if (!chosen.empty()) return majority_vote(chosen, L);
      }
      return majority_vote(labels, L);
    }
    case Method::kKnoraU: {
      std::vector<double> votes(M, 0.0);
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t idx : neighbors) votes[m] += cache_->correct(m, idx);
      }
      return weighted_majority_vote(labels, votes, L);
    }
    case Method::kSingleBest:
      return labels[single_best_];
    case Method::kStaticSelection: {
      std::vector<int> chosen;
      for (std::size_t m : static_subset_) chosen.push_back(labels[m]);
      return majority_vote(chosen, L);
    }
    case Method::kMajorityVote:
      return majority_vote(labels, L);
    case Method::kMetaDesOracle:
    case Method::kOracle:
      break;
  }
  throw std::invalid_argument(std::string(method_name(method)) + " is not a baseline method");
}

int baseline_predict(Method method, const ClassifierPool& pool, const DselCache& cache,
                     std::span<const double> x, std::size_t k) {
  return BaselineEnsemble(pool, cache, k).predict(method, x);
}

double oracle_accuracy(const ClassifierPool& pool, const Dataset& test) {
  if (test.empty()) throw std::invalid_argument("oracle_accuracy: empty test set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    for (const auto& m : pool.members()) {
      if (m.predict(test.row(i)).label == test.label(i)) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

}  // namespace metades
