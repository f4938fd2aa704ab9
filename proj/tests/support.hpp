#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "metades/dataset.hpp"
#include "metades/pool.hpp"
#include "metades/random.hpp"

namespace testing {

using namespace metades;

// Binary perceptron whose decision function is h . [x, 1].
inline Perceptron binary_perceptron(std::vector<double> h, double gain = 10.0) {
  const std::size_t d = h.size() - 1;
  std::vector<double> w;
  for (double v : h) w.push_back(-v);
  for (double v : h) w.push_back(v);
  return Perceptron(d, 2, std::move(w), gain, true);
}

// Always predicts `label`, with a margin that grows with `strength`.
inline Perceptron constant_perceptron(std::size_t d, std::size_t classes, int label,
                                      double strength = 1.0) {
  std::vector<double> w((d + 1) * classes, 0.0);
  if (classes == 2) {
    std::vector<double> h(d + 1, 0.0);
    h[d] = label == 1 ? strength : -strength;
    return binary_perceptron(h);
  }
  w[static_cast<std::size_t>(label) * (d + 1) + d] = strength;
  return Perceptron(d, classes, std::move(w), 10.0, true);
}

inline Perceptron random_perceptron(std::size_t d, std::size_t classes, Rng& rng) {
  const std::size_t rows = classes == 2 ? 1 : classes;
  std::vector<double> h(rows * (d + 1));
  for (auto& v : h) v = uniform(rng, -1.0, 1.0);
  if (classes == 2) return binary_perceptron(h);
  return Perceptron(d, classes, std::move(h), 10.0, true);
}

inline Dataset random_dataset(std::size_t n, std::size_t d, std::size_t classes, Rng& rng) {
  Dataset ds(d, classes);
  std::vector<double> x(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = uniform01(rng);
    // Every class appears at least once.
    const int label = i < classes ? static_cast<int>(i)
                                  : static_cast<int>(uniform_index(rng, classes));
    ds.add(x, label);
  }
  return ds;
}

inline std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("metades_test_" + name);
  std::ofstream(path) << content;
  return path;
}

inline double euclid(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace testing
