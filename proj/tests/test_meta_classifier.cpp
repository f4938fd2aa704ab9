#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "metades/meta_classifier.hpp"
#include "metades/random.hpp"

using namespace metades;

namespace {

MetaRows random_rows(std::size_t n, std::size_t d, Rng& rng, double signal = 2.0) {
  MetaRows rows;
  rows.dimension = d;
  std::vector<double> r(d);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i < 2 ? static_cast<int>(i) : static_cast<int>(uniform_index(rng, 2));
    for (std::size_t j = 0; j < d; ++j) r[j] = uniform(rng, -1.0, 1.0) + (j == 0 ? signal * y : 0.0);
    rows.add(r, y);
  }
  return rows;
}

}  // namespace

TEST_CASE("separable one-dimensional rows") {
  MetaRows rows;
  rows.dimension = 1;
  for (int i = 0; i < 20; ++i) {
    const double x = i < 10 ? -1.0 - 0.1 * i : 1.0 + 0.1 * i;
    rows.add(std::span<const double>(&x, 1), i < 10 ? 0 : 1);
  }
  const auto model = train_meta(rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double c = model.competence(rows.row(i));
    CHECK((rows.labels[i] == 1 ? c > 0.9 : c < 0.1));
  }
  CHECK(model.weights()[0] > 0.0);
}

TEST_CASE("competence is monotone along the learned weight") {
  Rng rng(3);
  const auto model = train_meta(random_rows(200, 1, rng));
  double previous = -1.0;
  for (int i = -50; i <= 50; ++i) {
    const double x = i * 0.1;
    const double c = model.competence(std::span<const double>(&x, 1));
    CHECK(c >= previous);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
    previous = c;
  }
}

TEST_CASE("conflicting duplicate rows give an even competence") {
  MetaRows rows;
  rows.dimension = 3;
  const std::vector<double> r = {0.2, 0.4, 0.6};
  for (int i = 0; i < 10; ++i) rows.add(r, i % 2);
  CHECK(train_meta(rows).competence(r) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("trained weights satisfy the optimality conditions") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + uniform_index(rng, 6);
    const auto rows = random_rows(30 + uniform_index(rng, 100), d, rng, uniform(rng, 0.0, 2.0));
    MetaTrainConfig config;
    config.l2 = uniform(rng, 1e-3, 1.0);
    const auto model = train_meta(rows, config);

    // Gradient of mean log-loss + 0.5 * l2 * |w|^2 in the standardized
    // space the model reports.
    const std::size_t n = rows.size();
    std::vector<double> grad(d, 0.0);
    double grad_bias = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = rows.row(i);
      const double residual = model.competence(x) - rows.labels[i];
      for (std::size_t j = 0; j < d; ++j) {
        grad[j] += residual * (x[j] - model.mean()[j]) / model.scale()[j] / static_cast<double>(n);
      }
      grad_bias += residual / static_cast<double>(n);
    }
    for (std::size_t j = 0; j < d; ++j) {
      grad[j] += config.l2 * model.weights()[j];
      REQUIRE(std::abs(grad[j]) <= 1e-6);
    }
    REQUIRE(std::abs(grad_bias) <= 1e-6);
  }
}

TEST_CASE("row order does not change the model") {
  Rng rng(7);
  const auto rows = random_rows(80, 4, rng);
  std::vector<std::size_t> perm(rows.size());
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(perm, rng);
  MetaRows shuffled;
  shuffled.dimension = rows.dimension;
  for (std::size_t i : perm) shuffled.add(rows.row(i), rows.labels[i]);
  const auto a = train_meta(rows);
  const auto b = train_meta(shuffled);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(std::abs(a.competence(rows.row(i)) - b.competence(rows.row(i))) <= 1e-9);
  }
  const auto again = train_meta(rows);
  CHECK(again.weights() == a.weights());
  CHECK(again.bias() == a.bias());
}

TEST_CASE("zero model, single-class rows and dimension checks") {
  const auto zero = MetaClassifier::zero(3);
  const std::vector<double> v = {5.0, -2.0, 0.1};
  CHECK(zero.competence(v) == 0.5);
  CHECK_THROWS_AS(zero.competence(std::vector<double>{1.0}), std::invalid_argument);

  MetaRows ones;
  ones.dimension = 2;
  ones.add(std::vector<double>{0.1, 0.2}, 1);
  ones.add(std::vector<double>{0.3, 0.1}, 1);
  const auto constant = train_meta(ones);
  CHECK(constant.degenerate());
  CHECK(constant.competence(std::vector<double>{9.0, 9.0}) > 0.999);

  MetaRows zeros = ones;
  zeros.labels = {0, 0};
  CHECK(train_meta(zeros).competence(std::vector<double>{0.0, 0.0}) < 0.001);

  MetaRows single;
  single.dimension = 2;
  single.add(std::vector<double>{0.1, 0.2}, 1);
  CHECK_THROWS_AS(train_meta(single), std::invalid_argument);
  CHECK_THROWS_AS(single.add(std::vector<double>{0.1}, 1), std::invalid_argument);
  CHECK_THROWS_AS(single.add(std::vector<double>{0.1, 0.3}, 2), std::invalid_argument);
}

TEST_CASE("constant columns are harmless") {
  MetaRows rows;
  rows.dimension = 2;
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> r = {static_cast<double>(i), 1.0};
    rows.add(r, i >= 10 ? 1 : 0);
  }
  const auto model = train_meta(rows);
  CHECK(std::isfinite(model.weights()[1]));
  CHECK(model.competence(std::vector<double>{19.0, 1.0}) > 0.5);
  CHECK(model.competence(std::vector<double>{0.0, 1.0}) < 0.5);
}
