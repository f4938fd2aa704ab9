#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "metades/des.hpp"
#include "support.hpp"

namespace testing {

// Reference k-NN: full O(n^2)-style selection by repeated minimum scan,
// ties broken by the lower index.
inline std::vector<std::size_t> brute_knn(std::span<const double> q, std::span<const double> pts,
                                   std::size_t dim, std::size_t k,
                                   std::optional<std::size_t> exclude = std::nullopt) {
  const std::size_t n = pts.size() / dim;
  std::vector<bool> taken(n, false);
  if (exclude) taken[*exclude] = true;
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < k; ++r) {
    std::size_t best = n;
    double best_d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      // Squared distance orders like the distance without rounding ties away.
      double d = 0.0;
      for (std::size_t j = 0; j < dim; ++j) d += (q[j] - pts[i * dim + j]) * (q[j] - pts[i * dim + j]);
      if (best == n || d < best_d) {
        best = i;
        best_d = d;
      }
    }
    taken[best] = true;
    out.push_back(best);
  }
  return out;
}

inline int brute_vote(const std::vector<int>& labels, const std::vector<double>& w, std::size_t L) {
  std::map<int, double> total;
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total[labels[i]] += w[i];
    sum += w[i];
  }
  if (sum <= 0.0) {
    total.clear();
    for (int l : labels) total[l] += 1.0;
  }
  int best = -1;
  for (std::size_t l = 0; l < L; ++l) {
    const auto it = total.find(static_cast<int>(l));
    if (it == total.end()) continue;
    if (best < 0 || it->second > total[best]) best = static_cast<int>(l);
  }
  return best;
}

struct Instance {
  ClassifierPool pool;
  Dataset dsel;
  std::vector<double> x;
  std::size_t k;
};

inline Instance random_instance(Rng& rng) {
  const std::size_t d = 1 + uniform_index(rng, 3);
  const std::size_t L = 2 + uniform_index(rng, 2);
  const std::size_t M = 1 + uniform_index(rng, 5);
  const std::size_t n = 5 + uniform_index(rng, 26);
  std::vector<Perceptron> members;
  for (std::size_t m = 0; m < M; ++m) members.push_back(random_perceptron(d, L, rng));
  Instance inst{ClassifierPool(members), random_dataset(n, d, L, rng), {}, 1 + uniform_index(rng, 5)};
  inst.x.resize(d);
  for (auto& v : inst.x) v = uniform01(rng);
  return inst;
}

// Brute-force restatements of the baselines from their definitions.
inline int brute_baseline(Method method, const Instance& in) {
  const auto& pool = in.pool;
  const auto& dsel = in.dsel;
  const std::size_t M = pool.size();
  const std::size_t L = pool.class_count();
  std::vector<int> labels;
  for (const auto& m : pool.members()) labels.push_back(m.predict(in.x).label);
  std::vector<std::size_t> nb(dsel.size());
  std::iota(nb.begin(), nb.end(), 0);
  std::stable_sort(nb.begin(), nb.end(), [&](std::size_t a, std::size_t b) {
    double da = 0.0, db = 0.0;
    for (std::size_t j = 0; j < in.x.size(); ++j) {
      da += (dsel.row(a)[j] - in.x[j]) * (dsel.row(a)[j] - in.x[j]);
      db += (dsel.row(b)[j] - in.x[j]) * (dsel.row(b)[j] - in.x[j]);
    }
    return da < db;
  });
  nb.resize(in.k);
  auto ok = [&](std::size_t m, std::size_t i) { return pool[m].predict(dsel.row(i)).label == dsel.label(i); };
  auto first_max = [](const std::vector<double>& s) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (s[i] > s[best]) best = i;
    }
    return best;
  };
  const std::vector<double> ones(M, 1.0);

  switch (method) {
    case Method::kOla: {
      std::vector<double> s(M, 0.0);
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t i : nb) s[m] += ok(m, i);
      }
      return labels[first_max(s)];
    }
    case Method::kLca: {
      std::vector<double> s(M, 0.0);
      for (std::size_t m = 0; m < M; ++m) {
        double same = 0.0, right = 0.0;
        for (std::size_t i : nb) {
          if (pool[m].predict(dsel.row(i)).label == labels[m]) {
            same += 1.0;
            if (dsel.label(i) == labels[m]) right += 1.0;
          }
        }
        s[m] = same > 0.0 ? right / same : 0.0;
      }
      return labels[first_max(s)];
    }
    case Method::kKnoraE: {
      for (std::size_t kk = in.k; kk >= 1; --kk) {
        std::vector<int> chosen;
        for (std::size_t m = 0; m < M; ++m) {
          bool all = true;
          for (std::size_t r = 0; r < kk; ++r) all = all && ok(m, nb[r]);
          if (all) chosen.push_back(labels[m]);
        }
        if (!chosen.empty()) return brute_vote(chosen, std::vector<double>(chosen.size(), 1.0), L);
      }
      return brute_vote(labels, ones, L);
    }
    case Method::kKnoraU: {
      std::vector<double> w(M, 0.0);
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t i : nb) w[m] += ok(m, i);
      }
      return brute_vote(labels, w, L);
    }
    case Method::kSingleBest: {
      std::vector<double> acc(M, 0.0);
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t i = 0; i < dsel.size(); ++i) acc[m] += ok(m, i);
      }
      return labels[first_max(acc)];
    }
    case Method::kMajorityVote:
      return brute_vote(labels, ones, L);
    default:
      return -1;
  }
}

}  // namespace testing
