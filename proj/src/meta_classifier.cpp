#include "metades/meta_classifier.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metades {

void MetaRows::add(std::span<const double> row, int label) {
  if (row.size() != dimension) throw std::invalid_argument("meta row has the wrong dimension");
  if (label != 0 && label != 1) throw std::invalid_argument("meta label must be 0 or 1");
  values.insert(values.end(), row.begin(), row.end());
  labels.push_back(label);
}

MetaClassifier::MetaClassifier(std::vector<double> weights, double bias, std::vector<double> mean,
                               std::vector<double> scale, std::string mask_fingerprint,
                               bool degenerate, std::size_t iterations)
    : weights_(std::move(weights)),
      bias_(bias),
      mean_(std::move(mean)),
      scale_(std::move(scale)),
      mask_fingerprint_(std::move(mask_fingerprint)),
      degenerate_(degenerate),
      iterations_(iterations) {
  if (mean_.size() != weights_.size() || scale_.size() != weights_.size()) {
    throw std::invalid_argument("meta-classifier parameter sizes disagree");
  }
}

MetaClassifier MetaClassifier::zero(std::size_t dimension) {
  return MetaClassifier(std::vector<double>(dimension, 0.0), 0.0,
                        std::vector<double>(dimension, 0.0), std::vector<double>(dimension, 1.0),
                        {}, false, 0);
}

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

double MetaClassifier::competence(std::span<const double> v) const {
  if (v.size() != weights_.size()) {
    throw std::invalid_argument("meta-classifier expects " + std::to_string(weights_.size()) +
                                " inputs, got " + std::to_string(v.size()));
  }
  double t = bias_;
  for (std::size_t j = 0; j < v.size(); ++j) t += weights_[j] * (v[j] - mean_[j]) / scale_[j];
  return sigmoid(t);
}

std::vector<double> MetaClassifier::competence(const MetaRows& rows) const {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = competence(rows.row(i));
  return out;
}

MetaClassifier train_meta(const MetaRows& rows, const MetaTrainConfig& config) {
  const std::size_t n = rows.size();
  const std::size_t d = rows.dimension;
  if (n < 2) throw std::invalid_argument("train_meta needs at least two rows");
  if (d == 0) throw std::invalid_argument("train_meta needs at least one input");

  const auto positives = static_cast<std::size_t>(std::count(rows.labels.begin(), rows.labels.end(), 1));
  std::vector<double> mean(d, 0.0);
  std::vector<double> scale(d, 1.0);
  if (positives == 0 || positives == n) {
    // Single meta-class: constant output at that class.
    const double bias = positives == n ? 40.0 : -40.0;
    return MetaClassifier(std::vector<double>(d, 0.0), bias, mean, scale, {}, true, 0);
  }

  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const Matrix> raw(rows.values.data(), static_cast<Eigen::Index>(n),
                               static_cast<Eigen::Index>(d));
  const Eigen::RowVectorXd mu = raw.colwise().mean();
  Eigen::RowVectorXd sd = ((raw.rowwise() - mu).array().square().colwise().sum() /
                           static_cast<double>(n))
                              .sqrt();
  for (Eigen::Index j = 0; j < sd.size(); ++j) {
    if (!(sd[j] > 1e-12)) sd[j] = 1.0;
  }

  // Design matrix with a trailing intercept column.
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d + 1));
  X.leftCols(static_cast<Eigen::Index>(d)) =
      ((raw.rowwise() - mu).array().rowwise() / sd.array()).matrix();
  X.col(static_cast<Eigen::Index>(d)).setOnes();

  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  Eigen::VectorXd weight(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    y[static_cast<Eigen::Index>(i)] = rows.labels[i];
    weight[static_cast<Eigen::Index>(i)] = rows.labels[i] == 1 ? config.positive_weight : 1.0;
  }
  const double total_weight = weight.sum();

  Eigen::VectorXd ridge = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d + 1), config.l2);
  ridge[static_cast<Eigen::Index>(d)] = 1e-10;

  auto objective = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd t = X * beta;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      // log(1 + e^t) - y t, evaluated stably.
      const double softplus = t[i] > 0 ? t[i] + std::log1p(std::exp(-t[i])) : std::log1p(std::exp(t[i]));
      loss += weight[i] * (softplus - y[i] * t[i]);
    }
    return loss / total_weight + 0.5 * (ridge.array() * beta.array().square()).sum();
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d + 1));
  double current = objective(beta);
  std::size_t iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    const Eigen::VectorXd t = X * beta;
    Eigen::VectorXd p(t.size());
    Eigen::VectorXd curvature(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      p[i] = sigmoid(t[i]);
      curvature[i] = weight[i] * p[i] * (1.0 - p[i]) / total_weight;
    }
    const Eigen::VectorXd grad =
        X.transpose() * (weight.cwiseProduct(p - y) / total_weight) +
        ridge.cwiseProduct(beta);
    Eigen::MatrixXd hessian = X.transpose() * curvature.asDiagonal() * X;
    hessian.diagonal() += ridge;
    const Eigen::VectorXd step = hessian.ldlt().solve(grad);

    double rate = 1.0;
    Eigen::VectorXd candidate = beta - step;
    double next = objective(candidate);
    while (next > current && rate > 1e-8) {
      rate *= 0.5;
      candidate = beta - rate * step;
      next = objective(candidate);
    }
    if (next > current) break;
    beta = candidate;
    const bool converged = (rate * step).lpNorm<Eigen::Infinity>() < config.tolerance ||
                           current - next < config.tolerance * config.tolerance;
    current = next;
    if (converged) {
      ++iter;
      break;
    }
  }

  std::vector<double> w(d);
  for (std::size_t j = 0; j < d; ++j) {
    w[j] = beta[static_cast<Eigen::Index>(j)];
    mean[j] = mu[static_cast<Eigen::Index>(j)];
    scale[j] = sd[static_cast<Eigen::Index>(j)];
  }
  return MetaClassifier(std::move(w), beta[static_cast<Eigen::Index>(d)], std::move(mean),
                        std::move(scale), {}, false, iter);
}

}  // namespace metades
