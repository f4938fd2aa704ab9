#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "metades/meta_classifier.hpp"
#include "metades/meta_features.hpp"
#include "metades/random.hpp"

namespace metades {

/// Fitness assigned to masks that cannot be scored (no selected feature).
inline constexpr double kWorstFitness = std::numeric_limits<double>::max();

/// Ideal competence: 1 when the classifier predicts the true label.
int oracle_competence(const Perceptron& classifier, std::span<const double> x, int true_label);

/// Distance between competence estimates and the Oracle's 0/1 competences:
/// sqrt(sum (estimate - oracle)^2) / n, with n the number of
/// (sample, classifier) rows. The 1/n sits outside the root.
double oracle_distance(std::span<const double> estimates, std::span<const int> oracle);

enum class TransferKind { kS, kV };

/// 1 / (1 + e^(-2v)).
double transfer_s(double v);
/// |(2/pi) atan((pi/2) v)|.
double transfer_v(double v);
double transfer(TransferKind kind, double v);

struct BpsoConfig {
  std::size_t swarm_size = 20;
  std::size_t max_generations = 100;
  double inertia = 1.0;
  double c1 = 2.0;
  double c2 = 2.0;
  std::size_t stall_limit = 5;
  TransferKind transfer = TransferKind::kV;
  double v_max = 6.0;
  std::size_t runs = 30;
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  void validate() const;
};

struct Particle {
  FeatureMask position;
  std::vector<double> velocity;
  FeatureMask best_position;
  double best_fitness = kWorstFitness;
  double fitness = kWorstFitness;
};

struct Swarm {
  std::vector<Particle> particles;
  FeatureMask best_position;
  double best_fitness = kWorstFitness;
  std::size_t generation = 0;
  Rng rng;
};

struct Archive {
  FeatureMask mask;
  double validation_fitness = kWorstFitness;
  std::size_t generation = 0;
  std::size_t run = 0;
  bool empty() const { return mask.size() == 0; }
};

using FitnessFn = std::function<double(const FeatureMask&)>;

/// Bits drawn Bernoulli(0.5), velocities zero.
Swarm init_swarm(std::size_t dimension, const BpsoConfig& config, std::uint64_t seed);

/// Scores every particle and updates personal and global bests on strict
/// improvement. Returns true when the global best improved. Scores are
/// computed in parallel, bests are updated in particle order.
bool evaluate_swarm(Swarm& swarm, const FitnessFn& fitness, std::size_t threads = 0);

/// Velocity update with a fresh uniform draw per term, clamped to
/// [-v_max, v_max].
void update_velocity(Particle& particle, const FeatureMask& global_best, const BpsoConfig& config,
                     Rng& rng);

/// Flips each bit with probability T(velocity), keeps it otherwise.
void update_position(Particle& particle, TransferKind kind, Rng& rng);

/// One generation: evaluate, update bests, then move every particle.
/// Returns whether the global best improved.
bool step(Swarm& swarm, const BpsoConfig& config, const FitnessFn& fitness);

struct TraceRow {
  std::size_t run = 0;
  std::size_t generation = 0;
  double gbest_fitness = kWorstFitness;
  double archive_validation = kWorstFitness;
  double mean_fitness = kWorstFitness;
};

struct AuditEntry {
  std::size_t run = 0;
  std::size_t generation = 0;
  std::size_t particle = 0;
  FeatureMask mask;
  double validation_fitness = kWorstFitness;
};

struct OptimizationResult {
  Archive archive;
  std::vector<Archive> run_archives;
  std::vector<FeatureMask> run_gbest;
  std::vector<double> run_gbest_validation;
  std::vector<TraceRow> trace;
  std::vector<AuditEntry> audit;
};

/// Binary PSO with global validation: `optimization` drives personal and
/// global bests, `validation` scores every moved particle and the archive
/// keeps the best-validated mask. Repeated config.runs times with derived
/// seeds; the archive with the lowest validation fitness wins (earliest run
/// on ties).
OptimizationResult optimize(std::size_t dimension, const BpsoConfig& config,
                            const FitnessFn& optimization, const FitnessFn& validation);

/// Meta-data for mask search. All three tables hold full-width vectors.
struct MetaSplit {
  MetaRows train;         // fits the meta-classifier
  MetaRows optimization;  // guides the swarm
  MetaRows validation;    // global validation (DSEL meta-data)
};

/// Columns of `rows` kept by `mask`.
MetaRows select_columns(const MetaRows& rows, const FeatureMask& mask);

/// Trains the meta-classifier on the masked training rows and returns the
/// Oracle distance on the masked optimization and validation rows. Results
/// are memoized per mask; safe to call from several threads.
class OracleFitness {
 public:
  OracleFitness(const MetaSplit& data, MetaTrainConfig config);

  struct Scores {
    double optimization = kWorstFitness;
    double validation = kWorstFitness;
  };
  Scores evaluate(const FeatureMask& mask) const;
  double optimization(const FeatureMask& mask) const { return evaluate(mask).optimization; }
  double validation(const FeatureMask& mask) const { return evaluate(mask).validation; }
  std::size_t evaluations() const;

 private:
  const MetaSplit* data_;
  MetaTrainConfig config_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, Scores> cache_;
};

OptimizationResult optimize(const MetaSplit& data, const MetaTrainConfig& meta_config,
                            const BpsoConfig& config);

}  // namespace metades
