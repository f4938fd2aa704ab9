#include "metades/meta_features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "metades/random.hpp"

namespace metades {

std::string_view feature_set_name(FeatureSet set) {
  switch (set) {
    case FeatureSet::kHard: return "f_Hard";
    case FeatureSet::kProb: return "f_Prob";
    case FeatureSet::kOverall: return "f_Overall";
    case FeatureSet::kCond: return "f_Cond";
    case FeatureSet::kConf: return "f_Conf";
    case FeatureSet::kAmb: return "f_Amb";
    case FeatureSet::kLog: return "f_Log";
    case FeatureSet::kPrc: return "f_PRC";
    case FeatureSet::kMinDiff: return "f_MD";
    case FeatureSet::kEntropy: return "f_Ent";
    case FeatureSet::kExp: return "f_Exp";
    case FeatureSet::kKullbackLeibler: return "f_KL";
    case FeatureSet::kOutputProfile: return "f_OP";
    case FeatureSet::kRank: return "f_Rank";
    case FeatureSet::kRankOutputProfile: return "f_RankOP";
  }
  return "?";
}

MetaFeatureLayout::MetaFeatureLayout(std::size_t k, std::size_t kp) : k_(k), kp_(kp) {
  if (k == 0 || kp == 0) throw std::invalid_argument("K and Kp must be at least 1");
  std::size_t offset = 0;
  for (std::size_t s = 0; s < kFeatureSetCount; ++s) {
    offsets_[s] = offset;
    offset += width(static_cast<FeatureSet>(s));
  }
  dimension_ = offset;
}

std::size_t MetaFeatureLayout::width(FeatureSet set) const {
  switch (set) {
    case FeatureSet::kOverall:
    case FeatureSet::kCond:
    case FeatureSet::kConf:
    case FeatureSet::kAmb:
    case FeatureSet::kRank:
    case FeatureSet::kRankOutputProfile:
      return 1;
    case FeatureSet::kOutputProfile:
      return kp_;
    default:
      return k_;
  }
}

FeatureSet MetaFeatureLayout::set_of(std::size_t index) const {
  if (index >= dimension_) throw std::out_of_range("meta-feature index out of range");
  std::size_t s = kFeatureSetCount - 1;
  while (offsets_[s] > index) --s;
  return static_cast<FeatureSet>(s);
}

std::string MetaFeatureLayout::feature_name(std::size_t index) const {
  const auto set = set_of(index);
  std::string name(feature_set_name(set));
  if (width(set) > 1) name += "_" + std::to_string(index - offset(set) + 1);
  return name;
}

// ---------------------------------------------------------------------------

FeatureMask::FeatureMask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_) b = b ? 1 : 0;
}

FeatureMask FeatureMask::all(std::size_t dimension) {
  return FeatureMask(std::vector<std::uint8_t>(dimension, 1));
}

FeatureMask FeatureMask::none(std::size_t dimension) {
  return FeatureMask(std::vector<std::uint8_t>(dimension, 0));
}

FeatureMask FeatureMask::parse(std::string_view bits) {
  std::vector<std::uint8_t> out;
  out.reserve(bits.size());
  for (char c : bits) {
    if (c != '0' && c != '1') throw std::invalid_argument("mask string must contain only 0/1");
    out.push_back(c == '1');
  }
  return FeatureMask(std::move(out));
}

std::size_t FeatureMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::string FeatureMask::to_string() const {
  std::string s;
  s.reserve(bits_.size());
  for (auto b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

std::vector<double> apply_mask(std::span<const double> values, const FeatureMask& mask) {
  if (values.size() != mask.size()) {
    throw std::invalid_argument("mask length " + std::to_string(mask.size()) +
                                " does not match vector length " + std::to_string(values.size()));
  }
  std::vector<double> out;
  out.reserve(mask.count());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask.test(i)) out.push_back(values[i]);
  }
  if (out.empty()) throw std::invalid_argument("cannot apply an all-zero mask");
  return out;
}

// ---------------------------------------------------------------------------

namespace criteria {

namespace {
double clamp_support(double s) { return std::clamp(s, kSupportFloor, kSupportCeil); }
}  // namespace

double ambiguity(std::span<const double> supports) {
  if (supports.size() < 2) return 1.0;
  double first = -std::numeric_limits<double>::infinity();
  double second = first;
  for (double s : supports) {
    if (s > first) {
      second = first;
      first = s;
    } else if (s > second) {
      second = s;
    }
  }
  return first - second;
}

double logarithmic(double correct_support, std::size_t class_count) {
  const double exponent = std::log(2.0) / std::log(static_cast<double>(class_count));
  const double s = std::clamp(correct_support, 0.0, 1.0);
  return 2.0 * std::pow(s, exponent) - 1.0;
}

double exponential(double correct_support, std::size_t class_count) {
  const double s = std::min(std::max(correct_support, 0.0), kSupportCeil);
  const double ratio = static_cast<double>(class_count - 1) * s / (1.0 - s);
  return 1.0 - std::exp2(-ratio);
}

double entropy(std::span<const double> supports) {
  double h = 0.0;
  for (double s : supports) {
    if (s <= 0.0) continue;
    const double c = clamp_support(s);
    h -= s * std::log(c);
  }
  return h;
}

double kl_from_uniform(std::span<const double> supports) {
  const double uniform = 1.0 / static_cast<double>(supports.size());
  double kl = 0.0;
  for (double s : supports) {
    if (s <= 0.0) continue;
    kl += s * std::log(std::max(s, kSupportFloor) / uniform);
  }
  return std::max(kl, 0.0);
}

double minimal_difference(std::span<const double> supports, std::size_t correct) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < supports.size(); ++l) {
    if (l == correct) continue;
    best = std::min(best, supports[l] - supports[correct]);
  }
  return best;
}

}  // namespace criteria

double rrc_competence(std::span<const double> supports, std::size_t correct_class,
                      std::size_t samples, std::uint64_t seed, double concentration) {
  if (correct_class >= supports.size()) throw std::out_of_range("rrc: class out of range");
  if (samples == 0) throw std::invalid_argument("rrc: need at least one sample");
  const std::size_t L = supports.size();
  std::vector<std::gamma_distribution<double>> alpha;
  std::vector<std::gamma_distribution<double>> beta;
  for (double s : supports) {
    const double m = std::clamp(s, criteria::kSupportFloor, criteria::kSupportCeil);
    alpha.emplace_back(concentration * m, 1.0);
    beta.emplace_back(concentration * (1.0 - m), 1.0);
  }
  Rng rng(seed);
  std::vector<double> draw(L);
  std::size_t wins = 0;
  for (std::size_t t = 0; t < samples; ++t) {
    for (std::size_t l = 0; l < L; ++l) {
      const double a = alpha[l](rng);
      const double b = beta[l](rng);
      draw[l] = a + b > 0.0 ? a / (a + b) : 0.0;
    }
    // Renormalizing the draws does not change which class ranks first.
    bool first = true;
    for (std::size_t l = 0; l < L && first; ++l) {
      if (l != correct_class && draw[l] >= draw[correct_class]) first = false;
    }
    wins += first;
  }
  return static_cast<double>(wins) / static_cast<double>(samples);
}

// ---------------------------------------------------------------------------

double ConfidenceBounds::normalize(std::size_t member, double distance) const {
  const double lo = min.at(member);
  const double hi = max.at(member);
  if (hi <= lo) return 0.5;
  return std::clamp((distance - lo) / (hi - lo), 0.0, 1.0);
}

ConfidenceBounds fit_confidence_bounds(const ClassifierPool& pool, const Dataset& dsel) {
  ConfidenceBounds b;
  b.min.assign(pool.size(), std::numeric_limits<double>::infinity());
  b.max.assign(pool.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t m = 0; m < pool.size(); ++m) {
    for (std::size_t i = 0; i < dsel.size(); ++i) {
      const double d = pool[m].boundary_distance(dsel.row(i));
      b.min[m] = std::min(b.min[m], d);
      b.max[m] = std::max(b.max[m], d);
    }
  }
  return b;
}

MetaFeatureExtractor::MetaFeatureExtractor(const ClassifierPool& pool, const DselCache& cache,
                                           std::size_t k, std::size_t kp,
                                           ConfidenceBounds bounds, RrcConfig rrc)
    : pool_(&pool), cache_(&cache), layout_(k, kp), bounds_(std::move(bounds)) {
  if (cache.pool_size() != pool.size()) throw std::invalid_argument("cache built for another pool");
  if (bounds_.min.size() != pool.size() || bounds_.max.size() != pool.size()) {
    throw std::invalid_argument("confidence bounds do not match pool size");
  }
  const std::size_t n = cache.size();
  rrc_.resize(pool.size() * n);
  for (std::size_t m = 0; m < pool.size(); ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto label = static_cast<std::size_t>(cache.dsel().label(i));
      rrc_[m * n + i] = rrc_competence(cache.supports(m, i), label, rrc.samples,
                                       derive_seed(rrc.seed, m * n + i), rrc.concentration);
    }
  }
}

QueryContext MetaFeatureExtractor::prepare(std::span<const double> x,
                                           std::optional<int> true_label,
                                           std::optional<std::size_t> exclude) const {
  const auto& dsel = cache_->dsel();
  const std::size_t available = dsel.size() - (exclude ? 1 : 0);
  if (layout_.k() > available || layout_.kp() > available) {
    throw std::invalid_argument("DSEL holds " + std::to_string(available) +
                                " candidate neighbors; K and Kp must not exceed that");
  }
  QueryContext q;
  q.x.assign(x.begin(), x.end());
  q.true_label = true_label;
  auto [order, dist] = rank_by_distance(x, dsel.values(), dsel.feature_count(), exclude);
  q.region.neighbor_indices.assign(order.begin(),
                                   order.begin() + static_cast<std::ptrdiff_t>(layout_.k()));
  q.region.distances.assign(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(layout_.k()));
  q.dsel_order = std::move(order);
  q.predictions.reserve(pool_->size());
  for (const auto& member : pool_->members()) q.predictions.push_back(member.predict(x));
  for (const auto& p : q.predictions) {
    q.profile.values.insert(q.profile.values.end(), p.supports.begin(), p.supports.end());
  }
  q.profile_neighbors = profile_neighborhood(q.profile, *cache_, layout_.kp(), exclude);
  return q;
}

MetaFeatureVector MetaFeatureExtractor::extract(const QueryContext& q, std::size_t member,
                                                std::size_t sample_id) const {
  const auto& dsel = cache_->dsel();
  const std::size_t L = cache_->class_count();
  const std::size_t K = layout_.k();
  const auto& pred = q.predictions.at(member);

  MetaFeatureVector v;
  v.values.assign(layout_.dimension(), 0.0);
  v.classifier_index = member;
  v.sample_id = sample_id;
  v.meta_label = q.true_label ? static_cast<int>(pred.label == *q.true_label) : -1;

  auto at = [&](FeatureSet set, std::size_t i = 0) -> double& {
    return v.values[layout_.offset(set) + i];
  };

  const auto assigned = static_cast<std::size_t>(pred.label);
  double hits = 0.0;
  double cond_num = 0.0;
  double cond_den = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t idx = q.region.neighbor_indices[k];
    const auto truth = static_cast<std::size_t>(dsel.label(idx));
    const auto s = cache_->supports(member, idx);
    const bool correct = cache_->correct(member, idx);
    const double s_true = s[truth];

    at(FeatureSet::kHard, k) = correct ? 1.0 : 0.0;
    at(FeatureSet::kProb, k) = s_true;
    at(FeatureSet::kLog, k) = criteria::logarithmic(s_true, L);
    at(FeatureSet::kPrc, k) = rrc(member, idx);
    at(FeatureSet::kMinDiff, k) = criteria::minimal_difference(s, truth);
    at(FeatureSet::kEntropy, k) = criteria::entropy(s);
    at(FeatureSet::kExp, k) = criteria::exponential(s_true, L);
    at(FeatureSet::kKullbackLeibler, k) = criteria::kl_from_uniform(s);

    hits += correct ? 1.0 : 0.0;
    cond_den += s[assigned];
    if (truth == assigned) cond_num += s[assigned];
  }
  at(FeatureSet::kOverall) = hits / static_cast<double>(K);
  at(FeatureSet::kCond) = cond_den > 0.0 ? cond_num / cond_den : 0.0;
  at(FeatureSet::kConf) = bounds_.normalize(member, pool_->members()[member].boundary_distance(q.x));
  at(FeatureSet::kAmb) = criteria::ambiguity(pred.supports);

  for (std::size_t k = 0; k < layout_.kp(); ++k) {
    const std::size_t idx = q.profile_neighbors.neighbor_indices[k];
    at(FeatureSet::kOutputProfile, k) =
        cache_->predicted(member, idx) == q.profile_neighbors.labels[k] ? 1.0 : 0.0;
  }

  std::size_t run = 0;
  while (run < q.dsel_order.size() && cache_->correct(member, q.dsel_order[run])) ++run;
  at(FeatureSet::kRank) = static_cast<double>(run);

  std::size_t run_op = 0;
  while (run_op < layout_.kp() &&
         cache_->correct(member, q.profile_neighbors.neighbor_indices[run_op])) {
    ++run_op;
  }
  at(FeatureSet::kRankOutputProfile) = static_cast<double>(run_op);
  return v;
}

}  // namespace metades
