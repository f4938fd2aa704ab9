// Acceptance checks. Prints one PASS/FAIL line per criterion. The exit code
// counts failures not listed in --known-failures.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "brute_force.hpp"
#include "metades/bpso.hpp"
#include "metades/experiment.hpp"
#include "metades/meta_features.hpp"

using namespace metades;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::size_t method_index(const RunReport& r, Method m) {
  for (std::size_t i = 0; i < r.methods.size(); ++i) {
    if (r.methods[i] == m) return i;
  }
  throw std::runtime_error("method missing from report");
}

double mean_of(const RunReport& r, Method m) {
  for (const auto& s : r.summary) {
    if (s.method == m) return s.mean;
  }
  throw std::runtime_error("method missing from summary");
}

// Every run report produced here is kept for the dominance check.
std::vector<RunReport> g_reports;

// ---- 1 ----------------------------------------------------------------

Outcome p2_reproduction(const fs::path& config_dir) {
  auto config = load_experiment_config(config_dir / "p2.json");
  const auto report = run_experiment(config);
  g_reports.push_back(report);

  const auto oi = method_index(report, Method::kOracle);
  const auto mi = method_index(report, Method::kMetaDesOracle);
  const auto si = method_index(report, Method::kSingleBest);
  const auto vi = method_index(report, Method::kMajorityVote);
  for (std::size_t r = 0; r < report.replications.size(); ++r) {
    const auto& a = report.replications[r].accuracy;
    std::cout << "    replication " << r << ": oracle " << fmt(a[oi]) << "  meta-des " << fmt(a[mi])
              << "  single-best " << fmt(a[si]) << "  majority " << fmt(a[vi]) << '\n';
  }
  const double oracle = mean_of(report, Method::kOracle);
  const double meta = mean_of(report, Method::kMetaDesOracle);
  const double single = mean_of(report, Method::kSingleBest);
  const double vote = mean_of(report, Method::kMajorityVote);
  const bool a = oracle >= 0.99;
  const bool b = single >= 0.48 && single <= 0.60;
  const bool c = meta >= 0.93;
  const bool d = meta - vote >= 0.10;
  std::ostringstream os;
  os << "mean over " << report.replications.size() << " replications: (a) oracle " << fmt(oracle)
     << (a ? " ok" : " <0.99") << ", (b) single-best " << fmt(single) << (b ? " ok" : " outside")
     << ", (c) meta-des " << fmt(meta) << (c ? " ok" : " <0.93") << ", (d) margin over vote "
     << fmt(meta - vote) << (d ? " ok" : " <0.10");
  return {a && b && c && d, os.str()};
}

// ---- 2 ----------------------------------------------------------------

Outcome vector_length() {
  Rng rng(202);
  const auto [train, scale] = scale_minmax(generate_p2(120, 1));
  const auto dsel = scale.apply(generate_p2(60, 2));
  BaggingConfig bc;
  bc.pool_size = 3;
  bc.perceptron.epochs = 10;
  const auto pool = bagging(train, bc, 3);
  const DselCache cache(pool, dsel);
  RrcConfig rrc;
  rrc.samples = 10;

  std::vector<std::pair<std::size_t, std::size_t>> pairs = {{7, 5}};
  for (int i = 0; i < 20; ++i) pairs.emplace_back(1 + uniform_index(rng, 20), 1 + uniform_index(rng, 20));
  for (const auto& [k, kp] : pairs) {
    const MetaFeatureExtractor ex(pool, cache, k, kp, fit_confidence_bounds(pool, dsel), rrc);
    const auto q = ex.prepare(dsel.row(0), dsel.label(0), 0);
    for (std::size_t m = 0; m < pool.size(); ++m) {
      const auto v = ex.extract(q, m);
      if (v.values.size() != k * 8 + kp + 6) {
        return {false, "K=" + std::to_string(k) + " Kp=" + std::to_string(kp) + " gave " +
                           std::to_string(v.values.size())};
      }
    }
    if (k == 7 && kp == 5 && ex.layout().dimension() != 67) return {false, "layout(7,5) != 67"};
  }
  return {true, "length 67 at K=7 Kp=5 and 8K+Kp+6 on 20 random pairs (extracted vectors)"};
}

// ---- 3 ----------------------------------------------------------------

Outcome transfer_identities() {
  if (transfer_s(0.0) != 0.5 || transfer_v(0.0) != 0.0) return {false, "value at zero"};
  const double tol = 1e-12;
  double prev_s = 0.0;
  double prev_v = 0.0;
  std::size_t points = 0;
  for (int i = -100000; i <= 100000; ++i) {
    const double v = i * 1e-4;
    const double s = transfer_s(v);
    const double t = transfer_v(v);
    if (s < prev_s - tol || s < 0.0 || s > 1.0) return {false, "T_S not monotone in [0,1] at " + fmt(v)};
    if (std::abs(transfer_s(-v) - (1.0 - s)) > tol) return {false, "T_S symmetry at " + fmt(v)};
    if (std::abs(transfer_v(-v) - t) > tol) return {false, "T_V evenness at " + fmt(v)};
    if (t < 0.0 || t >= 1.0) return {false, "T_V range at " + fmt(v)};
    if (v > 0.0 && t < prev_v - tol) return {false, "T_V not monotone on v>0 at " + fmt(v)};
    prev_s = s;
    if (v >= 0.0) prev_v = t;
    ++points;
  }
  return {true, "T_S(0)=0.5, T_V(0)=0; " + std::to_string(points) + " grid points in [-10,10]"};
}

// ---- 4 ----------------------------------------------------------------

Outcome oracle_fitness_zero() {
  std::size_t rows_checked = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto [train, scale] = scale_minmax(generate_p2(150, seed));
    const auto meta = scale.apply(generate_p2(100, seed + 100));
    const auto dsel = scale.apply(generate_p2(80, seed + 200));
    BaggingConfig bc;
    bc.pool_size = 5;
    const auto pool = bagging(train, bc, seed);
    const DselCache cache(pool, dsel);
    RrcConfig rrc;
    rrc.samples = 20;
    const MetaFeatureExtractor ex(pool, cache, 7, 5, fit_confidence_bounds(pool, dsel), rrc);
    for (double hc : {1.0, 0.7}) {
      const auto data = build_meta_dataset(ex, meta, false, hc, 1);
      std::vector<double> est;
      std::vector<int> oracle;
      for (const auto& row : data.rows) {
        est.push_back(oracle_competence(pool[row.classifier_index], meta.row(row.sample_id),
                                        meta.label(row.sample_id)));
        oracle.push_back(row.meta_label);
      }
      if (est.empty()) continue;
      const double f = oracle_distance(est, oracle);
      if (f != 0.0) return {false, "fitness " + fmt(f, 12) + " on seed " + std::to_string(seed)};
      rows_checked += est.size();
    }
  }
  return {true, "fitness exactly 0 on 10 meta-datasets (" + std::to_string(rows_checked) + " rows)"};
}

// ---- 5 ----------------------------------------------------------------

MetaRows constructed_rows(std::size_t n, Rng& rng) {
  MetaRows rows;
  rows.dimension = 4;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    const std::vector<double> r = {y + uniform(rng, -0.6, 0.6), uniform01(rng),
                                   y + uniform(rng, -1.5, 1.5), uniform01(rng)};
    rows.add(r, y);
  }
  return rows;
}

Outcome bpso_exhaustive() {
  std::size_t matches = 0;
  bool audit_ok = true;
  std::size_t audited = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(seed, 99));
    MetaSplit split{constructed_rows(40, rng), constructed_rows(40, rng), constructed_rows(40, rng)};
    FeatureMask best;
    double best_val = kWorstFitness;
    for (unsigned bits = 1; bits < 16; ++bits) {
      std::vector<std::uint8_t> b(4);
      for (int j = 0; j < 4; ++j) b[j] = (bits >> j) & 1;
      const FeatureMask m(b);
      const auto model = train_meta(select_columns(split.train, m));
      const auto masked = select_columns(split.validation, m);
      const double val = oracle_distance(model.competence(masked), masked.labels);
      if (val < best_val) {
        best_val = val;
        best = m;
      }
    }
    BpsoConfig config;
    config.seed = seed;
    config.runs = 5;
    const auto result = optimize(split, {}, config);
    matches += result.archive.mask == best;
    for (const auto& a : result.audit) {
      audit_ok = audit_ok && result.archive.validation_fitness <= a.validation_fitness;
      ++audited;
    }
  }
  const bool pass = matches >= 18 && audit_ok && audited > 0;
  return {pass, std::to_string(matches) + "/20 archives equal the exhaustive optimum; archive <= all " +
                    std::to_string(audited) + " audited validation fitnesses: " +
                    (audit_ok ? "yes" : "no")};
}

// ---- 6 ----------------------------------------------------------------

Outcome analytic_identities() {
  const double tol = 1e-9;
  for (std::size_t L = 2; L <= 10; ++L) {
    const double u = 1.0 / static_cast<double>(L);
    const std::vector<double> uniform(L, u);
    std::vector<double> one_hot(L, 0.0);
    one_hot[0] = 1.0;
    if (std::abs(criteria::logarithmic(u, L)) > tol) return {false, "f_Log(1/L) at L=" + std::to_string(L)};
    if (std::abs(criteria::exponential(0.0, L)) > tol) return {false, "f_Exp(0) at L=" + std::to_string(L)};
    if (std::abs(criteria::exponential(u, L) - 0.5) > tol) {
      return {false, "f_Exp(1/L) at L=" + std::to_string(L)};
    }
    if (std::abs(criteria::kl_from_uniform(uniform)) > tol) return {false, "f_KL(uniform)"};
    if (std::abs(criteria::entropy(one_hot)) > tol) return {false, "f_Ent(one-hot)"};
  }
  const std::vector<double> s = {0.65, 0.30, 0.05};
  const double amb = criteria::ambiguity(s);
  if (std::abs(amb - 0.35) > tol) return {false, "f_Amb example gave " + fmt(amb, 12)};
  return {true, "all identities within 1e-9 for L = 2..10; f_Amb example = " + fmt(amb, 12)};
}

// ---- 7 ----------------------------------------------------------------

Outcome oracle_dominance(std::size_t extra_seeds) {
  // Extra small P2 experiments with every method.
  for (std::uint64_t seed = 0; seed < extra_seeds; ++seed) {
    auto config = parse_experiment_config(nlohmann::json::parse(R"({
      "name": "dominance", "replications": 2,
      "dataset": {"p2": {"train": 120, "meta_train": 120, "dsel": 80, "test": 300}},
      "pool": {"size": 6, "epochs": 30},
      "bpso": {"runs": 1, "max_generations": 15},
      "rrc": {"samples": 50}
    })"));
    config.seed = seed;
    g_reports.push_back(run_experiment(config));
  }
  std::size_t rows = 0;
  std::size_t cells = 0;
  for (const auto& report : g_reports) {
    const auto oi = method_index(report, Method::kOracle);
    for (const auto& rep : report.replications) {
      if (!rep.error.empty()) continue;
      const double oracle = rep.accuracy[oi];
      for (std::size_t m = 0; m < rep.accuracy.size(); ++m) {
        if (std::isnan(rep.accuracy[m])) continue;
        if (rep.accuracy[m] > oracle) {
          return {false, report.name + ": " + std::string(method_name(report.methods[m])) + " " +
                             fmt(rep.accuracy[m]) + " > oracle " + fmt(oracle)};
        }
        ++cells;
      }
      ++rows;
    }
  }
  return {rows > 0, "oracle >= every method in " + std::to_string(rows) + " replications (" +
                        std::to_string(cells) + " cells)"};
}

// ---- 8 ----------------------------------------------------------------

Outcome brute_force_equivalence() {
  using testing::brute_knn;
  const std::size_t trials = 300;
  Rng rng(808);
  std::size_t knn = 0;
  std::size_t profiles = 0;
  std::size_t baselines = 0;
  std::size_t votes = 0;

  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t d = 1 + uniform_index(rng, 4);
    const std::size_t n = 2 + uniform_index(rng, 40);
    const auto ds = testing::random_dataset(n, d, 2, rng);
    std::vector<double> q(d);
    for (auto& v : q) v = uniform01(rng);
    const std::size_t k = 1 + uniform_index(rng, n);
    if (region_of(q, ds, k).neighbor_indices != brute_knn(q, ds.values(), d, k)) {
      return {false, "k-NN region mismatch on instance " + std::to_string(t)};
    }
    ++knn;
  }

  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t d = 1 + uniform_index(rng, 3);
    const std::size_t classes = 2 + uniform_index(rng, 2);
    const std::size_t m = 1 + uniform_index(rng, 5);
    const std::size_t n = 6 + uniform_index(rng, 30);
    std::vector<Perceptron> members;
    for (std::size_t i = 0; i < m; ++i) members.push_back(testing::random_perceptron(d, classes, rng));
    const ClassifierPool pool(members);
    const DselCache cache(pool, testing::random_dataset(n, d, classes, rng));
    std::vector<double> table;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const auto s = pool[j].predict(cache.dsel().row(i)).supports;
        table.insert(table.end(), s.begin(), s.end());
      }
    }
    std::vector<double> q(d);
    for (auto& v : q) v = uniform01(rng);
    const auto query = output_profile(pool, q);
    const std::size_t kp = 1 + uniform_index(rng, n - 1);
    if (profile_neighborhood(query, cache, kp).neighbor_indices !=
        brute_knn(query.values, table, m * classes, kp)) {
      return {false, "profile neighborhood mismatch on instance " + std::to_string(t)};
    }
    ++profiles;
  }

  const Method methods[] = {Method::kOla, Method::kLca, Method::kKnoraE, Method::kKnoraU};
  for (std::size_t t = 0; t < trials; ++t) {
    auto in = testing::random_instance(rng);
    in.k = std::min(in.k, in.dsel.size());
    const DselCache cache(in.pool, in.dsel);
    for (auto m : methods) {
      if (baseline_predict(m, in.pool, cache, in.x, in.k) != testing::brute_baseline(m, in)) {
        return {false, std::string(method_name(m)) + " mismatch on instance " + std::to_string(t)};
      }
    }
    ++baselines;
  }

  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t L = 2 + uniform_index(rng, 4);
    const std::size_t n = 1 + uniform_index(rng, 8);
    std::vector<int> labels(n);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(uniform_index(rng, L));
      w[i] = static_cast<double>(uniform_index(rng, 4)) * 0.25;
    }
    if (weighted_majority_vote(labels, w, L) != testing::brute_vote(labels, w, L)) {
      return {false, "weighted vote mismatch on instance " + std::to_string(t)};
    }
    ++votes;
  }
  return {true, "k-NN " + std::to_string(knn) + ", profiles " + std::to_string(profiles) +
                    ", OLA/LCA/KNORA-E/KNORA-U " + std::to_string(baselines) + ", vote " +
                    std::to_string(votes) + " instances"};
}

// ---- 9 ----------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism(const fs::path& cli, const fs::path& config_dir, const fs::path& scratch) {
  const auto config = config_dir / "iris.json";
  const auto a = scratch / "det_a";
  const auto b = scratch / "det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  for (const auto& [dir, threads] : {std::pair{a, 1}, std::pair{b, 2}}) {
    const std::string cmd = "\"" + cli.string() + "\" benchmark -c \"" + config.string() + "\" -o \"" +
                            dir.string() + "\" --threads " + std::to_string(threads) + " > \"" +
                            (scratch / "det.log").string() + "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "benchmark exited nonzero: " + cmd};
  }
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    if (entry.path().extension() != ".csv") continue;
    const auto other = b / entry.path().filename();
    if (!fs::exists(other)) return {false, "missing " + other.string()};
    if (slurp(entry.path()) != slurp(other)) return {false, entry.path().filename().string() + " differs"};
    ++files;
  }
  std::size_t other_files = 0;
  for (const auto& entry : fs::directory_iterator(b)) other_files += entry.path().extension() == ".csv";
  if (files == 0 || files != other_files) return {false, "CSV file sets differ"};
  return {true, std::to_string(files) + " CSV reports byte-identical across two CLI runs (threads 1 and 2)"};
}

// ---- 10 ---------------------------------------------------------------

Outcome smoke(const fs::path& data_dir, std::size_t replications, std::size_t pool_size,
              std::size_t bpso_runs) {
  bool pass = true;
  std::ostringstream os;
  for (const char* name : {"wine", "breast_cancer"}) {
    ExperimentConfig config;
    config.name = name;
    config.source.csv_path = data_dir / (std::string(name) + ".csv");
    config.replications = replications;
    config.seed = 10;
    config.train.bagging.pool_size = pool_size;
    config.train.bpso.runs = bpso_runs;
    config.methods = {Method::kMetaDesOracle, Method::kOracle, Method::kSingleBest,
                      Method::kKnoraE, Method::kMajorityVote};
    const auto report = run_experiment(config);
    g_reports.push_back(report);
    const double meta = mean_of(report, Method::kMetaDesOracle);
    const double single = mean_of(report, Method::kSingleBest);
    const bool ok = meta >= single;
    pass = pass && ok;
    os << name << " meta-des " << fmt(meta) << (ok ? " >= " : " < ") << "single-best " << fmt(single)
       << " (knora-e " << fmt(mean_of(report, Method::kKnoraE)) << "); ";
  }
  os << replications << " replications, pool " << pool_size;
  return {pass, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string cli = METADES_CLI;
  std::string config_dir = METADES_CONFIG_DIR;
  std::string data_dir = METADES_TEST_DATA;
  std::string scratch = (fs::temp_directory_path() / "metades_acceptance").string();
  std::vector<int> known;
  std::size_t smoke_reps = 10;
  std::size_t smoke_pool = 100;
  app.add_option("--cli", cli, "metades executable");
  app.add_option("--configs", config_dir, "directory holding p2.json and iris.json");
  app.add_option("--data", data_dir, "directory holding the bundled CSVs");
  app.add_option("--scratch", scratch, "working directory for CLI output");
  app.add_option("--known-failures", known, "criteria expected to fail")->delimiter(',');
  app.add_option("--smoke-replications", smoke_reps, "replications per smoke dataset");
  app.add_option("--smoke-pool", smoke_pool, "pool size for the smoke benchmark");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(scratch);

  const std::set<int> expected(known.begin(), known.end());
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"P2 reproduction", [&] { return p2_reproduction(config_dir); }},
      {"meta-feature vector length", vector_length},
      {"transfer-function identities", transfer_identities},
      {"oracle fitness is zero", oracle_fitness_zero},
      {"BPSO matches exhaustive search", bpso_exhaustive},
      {"meta-feature analytic identities", analytic_identities},
      {"oracle dominance", [] { return oracle_dominance(5); }},
      {"brute-force equivalences", brute_force_equivalence},
      {"benchmark determinism", [&] { return determinism(cli, config_dir, scratch); }},
      {"smoke benchmark", [&] { return smoke(data_dir, smoke_reps, smoke_pool, 3); }},
  };

  // Dominance runs last so it sees every report generated above.
  const std::vector<std::size_t> order = {0, 1, 2, 3, 4, 5, 7, 8, 9, 6};
  std::vector<Outcome> outcomes(criteria.size());
  std::vector<double> seconds(criteria.size());
  for (std::size_t i : order) {
    const auto start = std::chrono::steady_clock::now();
    try {
      outcomes[i] = criteria[i].second();
    } catch (const std::exception& e) {
      outcomes[i] = {false, std::string("exception: ") + e.what()};
    }
    seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    const auto& out = outcomes[i];
    const bool known_fail = expected.count(id) > 0;
    std::cout << (out.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": "
              << out.detail << " (" << fmt(seconds[i], 1) << " s)";
    if (!out.pass && known_fail) std::cout << " [known failure]";
    if (out.pass && known_fail) std::cout << " [listed as known failure but passed]";
    std::cout << '\n';
    if (!out.pass && !known_fail) ++unexpected;
  }
  return unexpected;
}
