#include "metades/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

#include "metades/parallel.hpp"
#include "metades/random.hpp"

namespace metades {

using nlohmann::json;

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& section) {
  if (!j.is_object()) throw std::invalid_argument("config: '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw std::invalid_argument("config: unknown key '" + key + "' in " + section);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string fmt(double v, int precision = 6) {
  if (std::isnan(v)) return "NA";
  if (v >= kWorstFitness) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (replications == 0) throw std::invalid_argument("replication count must be at least 1");
  if (methods.empty()) throw std::invalid_argument("no methods to compare");
  if (source.csv_path.has_value() == source.p2.has_value()) {
    throw std::invalid_argument("dataset must name exactly one of a csv path or p2");
  }
  if (source.csv_path && !std::filesystem::exists(*source.csv_path)) {
    throw std::invalid_argument("dataset file not found: " + source.csv_path->string());
  }
  if (source.p2) {
    const auto& s = *source.p2;
    if (s.train == 0 || s.meta_train == 0 || s.dsel == 0 || s.test == 0) {
      throw std::invalid_argument("p2 set sizes must be positive");
    }
  } else {
    split.validate();
  }
  train.hyper.validate();
  train.bpso.validate();
}

ExperimentConfig parse_experiment_config(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j,
                 {"name", "seed", "replications", "threads", "output_dir", "methods", "dataset",
                  "split", "pool", "des", "bpso", "meta", "rrc"},
                 "top level");
  ExperimentConfig c;
  read(j, "name", c.name);
  read(j, "seed", c.seed);
  read(j, "replications", c.replications);
  read(j, "threads", c.threads);
  if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
  }

  if (!j.contains("dataset")) throw std::invalid_argument("config: 'dataset' is required");
  const auto& d = j["dataset"];
  reject_unknown(d, {"csv", "label_column", "p2"}, "dataset");
  if (d.contains("csv")) {
    std::filesystem::path p = d["csv"].get<std::string>();
    c.source.csv_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    read(d, "label_column", c.source.label_column);
  }
  if (d.contains("p2")) {
    const auto& p = d["p2"];
    reject_unknown(p, {"train", "meta_train", "dsel", "test"}, "dataset.p2");
    P2Sizes s;
    read(p, "train", s.train);
    read(p, "meta_train", s.meta_train);
    read(p, "dsel", s.dsel);
    read(p, "test", s.test);
    c.source.p2 = s;
  }

  if (j.contains("split")) {
    const auto& s = j["split"];
    reject_unknown(s, {"train", "dsel", "test", "meta_of_train"}, "split");
    read(s, "train", c.split.train_frac);
    read(s, "dsel", c.split.dsel_frac);
    read(s, "test", c.split.test_frac);
    read(s, "meta_of_train", c.split.meta_frac_of_train);
  }
  auto& t = c.train;
  if (j.contains("pool")) {
    const auto& p = j["pool"];
    reject_unknown(p, {"size", "bootstrap_fraction", "epochs", "learning_rate", "support_gain"},
                   "pool");
    read(p, "size", t.bagging.pool_size);
    read(p, "bootstrap_fraction", t.bagging.bootstrap_frac);
    read(p, "epochs", t.bagging.perceptron.epochs);
    read(p, "learning_rate", t.bagging.perceptron.learning_rate);
    read(p, "support_gain", t.bagging.perceptron.support_gain);
  }
  if (j.contains("des")) {
    const auto& h = j["des"];
    reject_unknown(h, {"k", "kp", "consensus_threshold", "selection_threshold"}, "des");
    read(h, "k", t.hyper.k);
    read(h, "kp", t.hyper.kp);
    read(h, "consensus_threshold", t.hyper.consensus_threshold);
    read(h, "selection_threshold", t.hyper.selection_threshold);
  }
  if (j.contains("bpso")) {
    const auto& b = j["bpso"];
    reject_unknown(b,
                   {"swarm_size", "max_generations", "inertia", "c1", "c2", "stall_limit",
                    "transfer", "v_max", "runs"},
                   "bpso");
    read(b, "swarm_size", t.bpso.swarm_size);
    read(b, "max_generations", t.bpso.max_generations);
    read(b, "inertia", t.bpso.inertia);
    read(b, "c1", t.bpso.c1);
    read(b, "c2", t.bpso.c2);
    read(b, "stall_limit", t.bpso.stall_limit);
    read(b, "v_max", t.bpso.v_max);
    read(b, "runs", t.bpso.runs);
    if (b.contains("transfer")) {
      const auto kind = b["transfer"].get<std::string>();
      if (kind == "S" || kind == "s") {
        t.bpso.transfer = TransferKind::kS;
      } else if (kind == "V" || kind == "v") {
        t.bpso.transfer = TransferKind::kV;
      } else {
        throw std::invalid_argument("config: bpso.transfer must be \"S\" or \"V\"");
      }
    }
  }
  if (j.contains("meta")) {
    const auto& m = j["meta"];
    reject_unknown(m,
                   {"l2", "max_iterations", "tolerance", "positive_weight", "fit_fraction",
                    "select_features"},
                   "meta");
    read(m, "l2", t.meta.l2);
    read(m, "max_iterations", t.meta.max_iterations);
    read(m, "tolerance", t.meta.tolerance);
    read(m, "positive_weight", t.meta.positive_weight);
    read(m, "fit_fraction", t.meta_fit_fraction);
    read(m, "select_features", t.select_features);
  }
  if (j.contains("rrc")) {
    const auto& r = j["rrc"];
    reject_unknown(r, {"samples", "concentration", "seed"}, "rrc");
    read(r, "samples", t.rrc.samples);
    read(r, "concentration", t.rrc.concentration);
    read(r, "seed", t.rrc.seed);
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return parse_experiment_config(j, path.parent_path());
}

// ---------------------------------------------------------------------------

std::string frequency_band(double f) {
  if (f < 0.25) return "white";
  if (f < 0.50) return "light grey";
  if (f < 0.75) return "dark grey";
  return "black";
}

FrequencyReport frequency_report(const std::vector<FeatureMask>& masks,
                                 const MetaFeatureLayout& layout) {
  if (masks.empty()) throw std::invalid_argument("frequency report needs at least one mask");
  const std::size_t D = layout.dimension();
  FrequencyReport r;
  r.masks = masks.size();
  r.per_feature.assign(D, 0.0);
  for (const auto& m : masks) {
    if (m.size() != D) throw std::invalid_argument("mask length does not match the layout");
    for (std::size_t i = 0; i < D; ++i) r.per_feature[i] += m.test(i);
  }
  for (auto& f : r.per_feature) f /= static_cast<double>(masks.size());
  r.per_set.assign(kFeatureSetCount, 0.0);
  for (std::size_t s = 0; s < kFeatureSetCount; ++s) {
    const auto set = static_cast<FeatureSet>(s);
    const auto begin = layout.offset(set);
    const auto width = layout.width(set);
    for (std::size_t i = begin; i < begin + width; ++i) r.per_set[s] += r.per_feature[i];
    r.per_set[s] /= static_cast<double>(width);
  }
  return r;
}

std::vector<double> rank_row(const std::vector<double>& accuracy) {
  const std::size_t n = accuracy.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return accuracy[a] > accuracy[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && accuracy[order[j + 1]] == accuracy[order[i]]) ++j;
    const double shared = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = shared;
    i = j + 1;
  }
  return rank;
}

std::vector<MethodSummary> summarize(const std::vector<Method>& methods,
                                     const std::vector<ReplicationResult>& rows,
                                     Method reference) {
  const std::size_t n = methods.size();
  std::vector<MethodSummary> out(n);
  const auto ref_it = std::find(methods.begin(), methods.end(), reference);
  const auto ref = static_cast<std::size_t>(ref_it - methods.begin());

  std::vector<double> rank_sum(n, 0.0);
  std::size_t ranked_rows = 0;
  for (const auto& row : rows) {
    if (row.accuracy.size() != n) continue;
    if (std::none_of(row.accuracy.begin(), row.accuracy.end(),
                     [](double a) { return std::isnan(a); })) {
      const auto r = rank_row(row.accuracy);
      for (std::size_t m = 0; m < n; ++m) rank_sum[m] += r[m];
      ++ranked_rows;
    }
  }

  for (std::size_t m = 0; m < n; ++m) {
    auto& s = out[m];
    s.method = methods[m];
    std::vector<double> values;
    for (const auto& row : rows) {
      if (row.accuracy.size() != n || std::isnan(row.accuracy[m])) continue;
      values.push_back(row.accuracy[m]);
      if (ref_it == methods.end() || std::isnan(row.accuracy[ref])) continue;
      const double a = row.accuracy[ref];
      const double b = row.accuracy[m];
      if (a > b) {
        ++s.wins;
      } else if (a < b) {
        ++s.losses;
      } else {
        ++s.ties;
      }
    }
    s.valid = values.size();
    if (!values.empty()) {
      double sum = 0.0;
      for (double v : values) sum += v;
      s.mean = sum / static_cast<double>(values.size());
      if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
      }
    } else {
      s.mean = kMissing;
      s.stddev = kMissing;
    }
    s.average_rank = ranked_rows ? rank_sum[m] / static_cast<double>(ranked_rows) : kMissing;
  }
  return out;
}

// ---------------------------------------------------------------------------

ReplicationData make_replication_data(const ExperimentConfig& config, const Dataset* loaded,
                                      std::size_t replication) {
  const auto seed = derive_seed(config.seed, replication);
  if (config.source.p2) {
    const auto& s = *config.source.p2;
    return {generate_p2(s.train, derive_seed(seed, 1)),
            generate_p2(s.meta_train, derive_seed(seed, 2)),
            generate_p2(s.dsel, derive_seed(seed, 3)), generate_p2(s.test, derive_seed(seed, 4))};
  }
  if (!loaded) throw std::invalid_argument("csv source without loaded data");
  auto spec = config.split;
  spec.seed = derive_seed(seed, 0x51);
  auto split = split_holdout(*loaded, spec);
  return {std::move(split.train), std::move(split.meta_train), std::move(split.dsel),
          std::move(split.test)};
}

namespace {

struct Evaluation {
  std::vector<double> accuracy;
  double fallback_rate = 0.0;
};

Evaluation evaluate_methods(const std::vector<Method>& methods, const DesModel& model,
                            const Dataset& test) {
  if (test.empty()) throw std::invalid_argument("empty test set");
  const auto& pool = model.pool();
  const BaselineEnsemble baselines(pool, model.cache(), model.hyper().k);
  const bool need_des =
      std::find(methods.begin(), methods.end(), Method::kMetaDesOracle) != methods.end();

  std::vector<std::size_t> hits(methods.size(), 0);
  std::size_t fallbacks = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto x = test.row(i);
    const int truth = test.label(i);
    std::vector<int> labels;
    labels.reserve(pool.size());
    for (const auto& m : pool.members()) labels.push_back(m.predict(x).label);
    const auto region = region_of(x, model.dsel(), model.hyper().k);
    std::optional<Classification> des;
    if (need_des) {
      des = classify_scaled(model, x);
      fallbacks += des->fallback;
    }
    for (std::size_t m = 0; m < methods.size(); ++m) {
      bool correct = false;
      switch (methods[m]) {
        case Method::kMetaDesOracle:
          correct = des->label == truth;
          break;
        case Method::kOracle:
          correct = std::find(labels.begin(), labels.end(), truth) != labels.end();
          break;
        default:
          correct = baselines.predict(methods[m], labels, region.neighbor_indices) == truth;
      }
      hits[m] += correct;
    }
  }
  Evaluation e;
  const auto n = static_cast<double>(test.size());
  for (auto h : hits) e.accuracy.push_back(static_cast<double>(h) / n);
  e.fallback_rate = need_des ? static_cast<double>(fallbacks) / n : 0.0;
  return e;
}

}  // namespace

double method_accuracy(Method method, const DesModel& model, const Dataset& scaled_test,
                       double* fallback_rate) {
  const auto e = evaluate_methods({method}, model, scaled_test);
  if (fallback_rate) *fallback_rate = e.fallback_rate;
  return e.accuracy.front();
}

RunReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::optional<Dataset> loaded;
  if (config.source.csv_path) {
    loaded = load_csv(*config.source.csv_path, config.source.label_column);
  }

  const std::size_t hw =
      config.threads ? config.threads
                     : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t outer = std::min(hw, config.replications);
  const std::size_t inner = std::max<std::size_t>(1, hw / outer);

  RunReport report;
  report.name = config.name;
  report.methods = config.methods;
  report.k = config.train.hyper.k;
  report.kp = config.train.hyper.kp;
  report.dimension = MetaFeatureLayout(report.k, report.kp).dimension();
  report.replications.resize(config.replications);

  parallel_for(
      config.replications,
      [&](std::size_t r) {
        auto& out = report.replications[r];
        try {
          auto data = make_replication_data(config, loaded ? &*loaded : nullptr, r);
          auto tc = config.train;
          tc.seed = derive_seed(derive_seed(config.seed, r), 0x7a);
          tc.threads = inner;
          tc.bpso.threads = inner;
          auto result = train_des(data.train, data.meta_train, data.dsel, tc);
          const auto test = result.model.scale().apply(data.test);
          auto e = evaluate_methods(config.methods, result.model, test);
          out.accuracy = std::move(e.accuracy);
          out.fallback_rate = e.fallback_rate;
          out.mask = result.model.mask();
          out.trace = std::move(result.optimization.trace);
          out.meta_rows = result.meta_train.rows.size();
        } catch (const std::exception& ex) {
          out.accuracy.assign(config.methods.size(), kMissing);
          out.error = ex.what();
        }
      },
      outer);

  for (std::size_t r = 0; r < report.replications.size(); ++r) {
    if (!report.replications[r].error.empty()) {
      std::cerr << "replication " << r << " failed: " << report.replications[r].error << '\n';
    }
  }
  report.summary = summarize(report.methods, report.replications, report.reference);
  std::vector<FeatureMask> masks;
  for (const auto& rep : report.replications) {
    if (rep.mask) masks.push_back(*rep.mask);
  }
  if (!masks.empty()) {
    report.frequencies = frequency_report(masks, MetaFeatureLayout(report.k, report.kp));
  }
  return report;
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "accuracy.csv");
    out << "replication";
    for (auto m : report.methods) out << ',' << method_name(m);
    out << '\n';
    for (std::size_t r = 0; r < report.replications.size(); ++r) {
      out << r;
      for (double a : report.replications[r].accuracy) out << ',' << fmt(a);
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "summary.csv");
    out << "method,mean,std,average_rank,wins,ties,losses,replications\n";
    for (const auto& s : report.summary) {
      out << method_name(s.method) << ',' << fmt(s.mean) << ',' << fmt(s.stddev) << ','
          << fmt(s.average_rank, 4) << ',' << s.wins << ',' << s.ties << ',' << s.losses << ','
          << s.valid << '\n';
    }
  }
  const MetaFeatureLayout layout(report.k, report.kp);
  if (report.frequencies) {
    const auto& f = *report.frequencies;
    auto out = open_out(dir / "frequencies.csv");
    out << "index,feature,set,frequency,band\n";
    for (std::size_t i = 0; i < f.per_feature.size(); ++i) {
      out << i << ',' << layout.feature_name(i) << ',' << feature_set_name(layout.set_of(i))
          << ',' << fmt(f.per_feature[i], 4) << ',' << frequency_band(f.per_feature[i]) << '\n';
    }
    auto sets = open_out(dir / "feature_sets.csv");
    sets << "set,width,frequency,band\n";
    for (std::size_t s = 0; s < f.per_set.size(); ++s) {
      const auto set = static_cast<FeatureSet>(s);
      sets << feature_set_name(set) << ',' << layout.width(set) << ',' << fmt(f.per_set[s], 4)
           << ',' << frequency_band(f.per_set[s]) << '\n';
    }
  }
  {
    auto out = open_out(dir / "trace.csv");
    out << "replication,run,generation,gbest_fitness,archive_validation_fitness,"
           "mean_swarm_fitness\n";
    for (std::size_t r = 0; r < report.replications.size(); ++r) {
      for (const auto& t : report.replications[r].trace) {
        out << r << ',' << t.run << ',' << t.generation << ',' << fmt(t.gbest_fitness, 10) << ','
            << fmt(t.archive_validation, 10) << ',' << fmt(t.mean_fitness, 10) << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "summary.txt");
    out << report.name << ": " << report.replications.size() << " replication(s), D = "
        << report.dimension << "\n\n";
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %9s %9s %8s  %s\n", "method", "mean", "std", "rank",
                  "W-T-L vs reference");
    out << line;
    for (const auto& s : report.summary) {
      std::snprintf(line, sizeof line, "%-18s %9s %9s %8s  %zu-%zu-%zu\n",
                    std::string(method_name(s.method)).c_str(), fmt(s.mean, 4).c_str(),
                    fmt(s.stddev, 4).c_str(), fmt(s.average_rank, 2).c_str(), s.wins, s.ties,
                    s.losses);
      out << line;
    }
    out << "\nreference: " << method_name(report.reference)
        << " (W = reference more accurate)\n";
    for (std::size_t r = 0; r < report.replications.size(); ++r) {
      const auto& rep = report.replications[r];
      if (!rep.error.empty()) out << "replication " << r << " failed: " << rep.error << '\n';
    }
    if (report.frequencies) {
      out << "\nselection frequency per meta-feature set:\n";
      for (std::size_t s = 0; s < report.frequencies->per_set.size(); ++s) {
        const double f = report.frequencies->per_set[s];
        std::snprintf(line, sizeof line, "  %-9s %6s  %s\n",
                      std::string(feature_set_name(static_cast<FeatureSet>(s))).c_str(),
                      fmt(f, 3).c_str(), frequency_band(f).c_str());
        out << line;
      }
    }
  }
}

void write_predictions_csv(const std::filesystem::path& path, const std::vector<PredictionRow>& rows,
                           const std::vector<std::string>& class_names) {
  auto out = open_out(path);
  auto name = [&](int label) {
    const auto l = static_cast<std::size_t>(label);
    return l < class_names.size() ? class_names[l] : std::to_string(label);
  };
  out << "sample_id,true_label,predicted_label,method,fallback,selected_count\n";
  for (const auto& r : rows) {
    out << r.sample_id << ',' << name(r.true_label) << ',' << name(r.predicted) << ','
        << method_name(r.method) << ',' << (r.fallback ? 1 : 0) << ',' << r.selected << '\n';
  }
}

}  // namespace metades
