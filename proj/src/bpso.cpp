#include "metades/bpso.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "metades/parallel.hpp"

namespace metades {

int oracle_competence(const Perceptron& classifier, std::span<const double> x, int true_label) {
  return classifier.predict(x).label == true_label ? 1 : 0;
}

double oracle_distance(std::span<const double> estimates, std::span<const int> oracle) {
  if (estimates.size() != oracle.size()) {
    throw std::invalid_argument("oracle_distance: estimate and oracle counts differ");
  }
  if (estimates.empty()) throw std::invalid_argument("oracle_distance: no rows");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double diff = estimates[i] - static_cast<double>(oracle[i]);
    sum += diff * diff;
  }
  return std::sqrt(sum) / static_cast<double>(estimates.size());
}

double transfer_s(double v) { return 1.0 / (1.0 + std::exp(-2.0 * v)); }

double transfer_v(double v) {
  return std::abs(2.0 / std::numbers::pi * std::atan(std::numbers::pi / 2.0 * v));
}

double transfer(TransferKind kind, double v) {
  return kind == TransferKind::kS ? transfer_s(v) : transfer_v(v);
}

void BpsoConfig::validate() const {
  if (swarm_size == 0 || max_generations == 0 || runs == 0 || stall_limit == 0) {
    throw std::invalid_argument("BPSO swarm size, generations, runs and stall limit must be positive");
  }
  if (!(inertia > 0.0 && c1 > 0.0 && c2 > 0.0 && v_max > 0.0)) {
    throw std::invalid_argument("BPSO inertia, acceleration and v_max must be positive");
  }
}

Swarm init_swarm(std::size_t dimension, const BpsoConfig& config, std::uint64_t seed) {
  if (dimension == 0) throw std::invalid_argument("BPSO needs at least one dimension");
  Swarm swarm;
  swarm.rng.seed(seed);
  swarm.particles.resize(config.swarm_size);
  for (auto& p : swarm.particles) {
    std::vector<std::uint8_t> bits(dimension);
    for (auto& b : bits) b = uniform01(swarm.rng) < 0.5 ? 1 : 0;
    p.position = FeatureMask(std::move(bits));
    p.velocity.assign(dimension, 0.0);
    p.best_position = p.position;
  }
  swarm.best_position = swarm.particles.front().position;
  return swarm;
}

bool evaluate_swarm(Swarm& swarm, const FitnessFn& fitness, std::size_t threads) {
  std::vector<double> scores(swarm.particles.size());
  parallel_for(
      scores.size(),
      [&](std::size_t i) {
        const auto& mask = swarm.particles[i].position;
        scores[i] = mask.any() ? fitness(mask) : kWorstFitness;
      },
      threads);
  bool improved = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto& p = swarm.particles[i];
    p.fitness = scores[i];
    if (p.fitness < p.best_fitness) {
      p.best_fitness = p.fitness;
      p.best_position = p.position;
    }
    if (p.fitness < swarm.best_fitness) {
      swarm.best_fitness = p.fitness;
      swarm.best_position = p.position;
      improved = true;
    }
  }
  ++swarm.generation;
  return improved;
}

void update_velocity(Particle& particle, const FeatureMask& global_best, const BpsoConfig& config,
                     Rng& rng) {
  for (std::size_t d = 0; d < particle.velocity.size(); ++d) {
    const double s = particle.position.test(d) ? 1.0 : 0.0;
    const double personal = (particle.best_position.test(d) ? 1.0 : 0.0) - s;
    const double social = (global_best.test(d) ? 1.0 : 0.0) - s;
    const double r1 = uniform01(rng);
    const double r2 = uniform01(rng);
    const double v = config.inertia * particle.velocity[d] + config.c1 * r1 * personal +
                     config.c2 * r2 * social;
    particle.velocity[d] = std::clamp(v, -config.v_max, config.v_max);
  }
}

void update_position(Particle& particle, TransferKind kind, Rng& rng) {
  for (std::size_t d = 0; d < particle.velocity.size(); ++d) {
    if (uniform01(rng) < transfer(kind, particle.velocity[d])) particle.position.flip(d);
  }
}

namespace {

void move_swarm(Swarm& swarm, const BpsoConfig& config) {
  for (auto& p : swarm.particles) {
    update_velocity(p, swarm.best_position, config, swarm.rng);
    update_position(p, config.transfer, swarm.rng);
  }
}

}  // namespace

bool step(Swarm& swarm, const BpsoConfig& config, const FitnessFn& fitness) {
  const bool improved = evaluate_swarm(swarm, fitness, config.threads);
  move_swarm(swarm, config);
  return improved;
}

OptimizationResult optimize(std::size_t dimension, const BpsoConfig& config,
                            const FitnessFn& optimization, const FitnessFn& validation) {
  config.validate();
  OptimizationResult result;
  for (std::size_t run = 0; run < config.runs; ++run) {
    Swarm swarm = init_swarm(dimension, config, derive_seed(config.seed, run));
    Archive archive;
    archive.run = run;
    std::size_t stall = 0;
    for (std::size_t g = 1; g <= config.max_generations; ++g) {
      const bool improved = step(swarm, config, optimization);
      stall = improved ? 0 : stall + 1;

      // Global validation of the moved particles.
      std::vector<double> scores(swarm.particles.size());
      parallel_for(
          scores.size(),
          [&](std::size_t i) {
            const auto& mask = swarm.particles[i].position;
            scores[i] = mask.any() ? validation(mask) : kWorstFitness;
          },
          config.threads);
      double mean = 0.0;
      std::size_t scored = 0;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto& p = swarm.particles[i];
        result.audit.push_back({run, g, i, p.position, scores[i]});
        if (scores[i] < archive.validation_fitness) {
          archive.mask = p.position;
          archive.validation_fitness = scores[i];
          archive.generation = g;
        }
        if (p.fitness < kWorstFitness) {
          mean += p.fitness;
          ++scored;
        }
      }
      mean = scored ? mean / static_cast<double>(scored) : kWorstFitness;
      result.trace.push_back({run, g, swarm.best_fitness, archive.validation_fitness, mean});
      if (stall >= config.stall_limit) break;
    }
    result.run_archives.push_back(archive);
    result.run_gbest.push_back(swarm.best_position);
    result.run_gbest_validation.push_back(
        swarm.best_position.any() ? validation(swarm.best_position) : kWorstFitness);
    if (!archive.empty() && archive.validation_fitness < result.archive.validation_fitness) {
      result.archive = archive;
    }
  }
  if (result.archive.empty()) {
    // Every validated particle was empty; fall back to the full feature set.
    result.archive.mask = FeatureMask::all(dimension);
    result.archive.validation_fitness = validation(result.archive.mask);
  }
  return result;
}

// ---------------------------------------------------------------------------

MetaRows select_columns(const MetaRows& rows, const FeatureMask& mask) {
  if (mask.size() != rows.dimension) throw std::invalid_argument("mask length mismatch");
  MetaRows out;
  out.dimension = mask.count();
  out.values.reserve(out.dimension * rows.size());
  out.labels = rows.labels;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (mask.test(j)) out.values.push_back(r[j]);
    }
  }
  return out;
}

OracleFitness::OracleFitness(const MetaSplit& data, MetaTrainConfig config)
    : data_(&data), config_(config) {
  if (data.train.size() < 2 || data.optimization.size() == 0 || data.validation.size() == 0) {
    throw std::invalid_argument("meta-data halves and validation set must be non-empty");
  }
}

OracleFitness::Scores OracleFitness::evaluate(const FeatureMask& mask) const {
  if (!mask.any()) return {};
  const auto key = mask.to_string();
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const auto model = train_meta(select_columns(data_->train, mask), config_);
  auto score = [&](const MetaRows& rows) {
    const auto masked = select_columns(rows, mask);
    return oracle_distance(model.competence(masked), masked.labels);
  };
  const Scores s{score(data_->optimization), score(data_->validation)};
  std::lock_guard lock(mutex_);
  cache_.emplace(key, s);
  return s;
}

std::size_t OracleFitness::evaluations() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

OptimizationResult optimize(const MetaSplit& data, const MetaTrainConfig& meta_config,
                            const BpsoConfig& config) {
  OracleFitness fitness(data, meta_config);
  return optimize(
      data.train.dimension, config,
      [&](const FeatureMask& m) { return fitness.optimization(m); },
      [&](const FeatureMask& m) { return fitness.validation(m); });
}

}  // namespace metades
