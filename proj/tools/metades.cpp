#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "metades/experiment.hpp"
#include "metades/model_io.hpp"

using namespace metades;

namespace {

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_method(item));
  }
  return out;
}

struct Overrides {
  std::string config;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::string methods;
  std::size_t replications = 0;
  std::size_t threads = 0;
};

ExperimentConfig resolve(const Overrides& o, const CLI::App& cmd) {
  auto config = load_experiment_config(o.config);
  if (cmd.count("--seed")) config.seed = o.seed;
  if (!o.output_dir.empty()) config.output_dir = o.output_dir;
  if (!o.methods.empty()) config.methods = parse_methods(o.methods);
  if (o.replications) config.replications = o.replications;
  if (cmd.count("--threads")) config.threads = o.threads;
  return config;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "experiment config (JSON)")->required()->check(
      CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("-o,--output-dir", o.output_dir, "override the output directory");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

int gen_p2(std::size_t n, std::uint64_t seed, const std::string& out) {
  write_csv(out, generate_p2(n, seed));
  std::cerr << "wrote " << n << " P2 samples to " << out << '\n';
  return 0;
}

int train(const Overrides& o, const CLI::App& cmd, const std::string& model_path,
          bool dump_meta) {
  const auto config = resolve(o, cmd);
  config.validate();
  std::optional<Dataset> loaded;
  if (config.source.csv_path) loaded = load_csv(*config.source.csv_path, config.source.label_column);
  auto data = make_replication_data(config, loaded ? &*loaded : nullptr, 0);

  auto tc = config.train;
  tc.seed = derive_seed(derive_seed(config.seed, 0), 0x7a);
  tc.threads = config.threads;
  tc.bpso.threads = config.threads;
  auto result = train_des(data.train, data.meta_train, data.dsel, tc);

  std::filesystem::create_directories(config.output_dir);
  const auto path = model_path.empty() ? config.output_dir / "model.json"
                                       : std::filesystem::path(model_path);
  save_model(result.model, path);
  write_csv(config.output_dir / "test.csv", data.test);

  {
    std::ofstream out(config.output_dir / "trace.csv");
    out << "run,generation,gbest_fitness,archive_validation_fitness,mean_swarm_fitness\n";
    char line[160];
    for (const auto& t : result.optimization.trace) {
      std::snprintf(line, sizeof line, "%zu,%zu,%.10f,%.10f,%.10f\n", t.run, t.generation,
                    t.gbest_fitness, t.archive_validation, t.mean_fitness);
      out << line;
    }
  }
  if (dump_meta) {
    const MetaFeatureLayout layout(tc.hyper.k, tc.hyper.kp);
    write_meta_dataset_csv(config.output_dir / "meta_train.csv", result.meta_train, layout);
    write_meta_dataset_csv(config.output_dir / "dsel_meta.csv", result.dsel_meta, layout);
  }

  const auto& m = result.model;
  std::cout << "model: " << path.string() << '\n'
            << "pool size: " << m.pool().size() << '\n'
            << "meta-training samples kept: " << result.meta_train.kept_samples.size() << " of "
            << result.meta_train.total_samples << '\n'
            << "selected meta-features: " << m.mask().count() << " of " << m.mask().size()
            << '\n'
            << "mask: " << m.mask().to_string() << '\n'
            << "archive validation fitness: " << result.optimization.archive.validation_fitness
            << '\n';
  return 0;
}

int classify_cmd(const std::string& model_path, const std::string& data_path, int label_column,
                 const std::string& methods_arg, const std::string& out_path) {
  const auto model = load_model(model_path);
  const auto raw = load_csv_with_classes(data_path, label_column, model.class_names());
  const auto test = model.scale().apply(raw);
  const auto methods = methods_arg.empty() ? std::vector<Method>{Method::kMetaDesOracle}
                                           : parse_methods(methods_arg);
  const BaselineEnsemble baselines(model.pool(), model.cache(), model.hyper().k);

  std::vector<PredictionRow> rows;
  std::vector<std::size_t> hits(methods.size(), 0);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto x = test.row(i);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      PredictionRow row{i, test.label(i), 0, methods[m], false, 0};
      if (methods[m] == Method::kMetaDesOracle) {
        const auto c = classify_scaled(model, x);
        row.predicted = c.label;
        row.fallback = c.fallback;
        row.selected = c.fallback ? 1 : c.selected.size();
      } else if (methods[m] == Method::kOracle) {
        row.predicted = model.pool()[0].predict(x).label;
        for (const auto& member : model.pool().members()) {
          if (member.predict(x).label == row.true_label) row.predicted = row.true_label;
        }
        row.selected = model.pool().size();
      } else {
        row.predicted = baselines.predict(methods[m], x);
      }
      hits[m] += row.predicted == row.true_label;
      rows.push_back(row);
    }
  }
  if (!out_path.empty()) write_predictions_csv(out_path, rows, model.class_names());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::printf("%-18s accuracy %.4f (%zu samples)\n",
                std::string(method_name(methods[m])).c_str(),
                static_cast<double>(hits[m]) / static_cast<double>(test.size()), test.size());
  }
  return 0;
}

int benchmark(const Overrides& o, const CLI::App& cmd) {
  const auto config = resolve(o, cmd);
  const auto report = run_experiment(config);
  write_report(report, config.output_dir);
  std::ifstream summary(config.output_dir / "summary.txt");
  std::cout << summary.rdbuf();
  const bool any_failed = std::any_of(report.replications.begin(), report.replications.end(),
                                      [](const ReplicationResult& r) { return !r.error.empty(); });
  return any_failed ? 3 : 0;
}

int freq_report(const std::string& masks_path, std::size_t k, std::size_t kp,
                const std::string& out_path) {
  std::ifstream in(masks_path);
  if (!in) throw std::runtime_error("cannot open " + masks_path);
  std::vector<FeatureMask> masks;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    masks.push_back(FeatureMask::parse(line));
  }
  const MetaFeatureLayout layout(k, kp);
  const auto r = frequency_report(masks, layout);

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  out << "index,feature,set,frequency,band\n";
  char buf[128];
  for (std::size_t i = 0; i < r.per_feature.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.4f", r.per_feature[i]);
    out << i << ',' << layout.feature_name(i) << ',' << feature_set_name(layout.set_of(i)) << ','
        << buf << ',' << frequency_band(r.per_feature[i]) << '\n';
  }
  std::cerr << masks.size() << " mask(s); per-set frequency:\n";
  for (std::size_t s = 0; s < r.per_set.size(); ++s) {
    std::snprintf(buf, sizeof buf, "  %-9s %.3f  ",
                  std::string(feature_set_name(static_cast<FeatureSet>(s))).c_str(),
                  r.per_set[s]);
    std::cerr << buf << frequency_band(r.per_set[s]) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic ensemble selection with meta-learning and BPSO meta-feature selection"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-p2", "write a P2 problem sample as CSV");
  std::size_t gen_n = 500;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("-n,--samples", gen_n, "number of samples")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("-o,--out", gen_out, "output CSV")->required();

  Overrides train_o;
  std::string model_path;
  bool dump_meta = false;
  auto* tr = app.add_subcommand("train", "train one model on replication 0 of a config");
  add_common(tr, train_o);
  tr->add_option("-m,--model", model_path, "model file (default <output-dir>/model.json)");
  tr->add_flag("--dump-meta", dump_meta, "also write the meta-training datasets as CSV");

  auto* cl = app.add_subcommand("classify", "classify a labeled CSV with a saved model");
  std::string cl_model;
  std::string cl_data;
  std::string cl_methods;
  std::string cl_out;
  int cl_label = -1;
  cl->add_option("-m,--model", cl_model, "model file")->required()->check(CLI::ExistingFile);
  cl->add_option("-d,--data", cl_data, "CSV to classify")->required()->check(CLI::ExistingFile);
  cl->add_option("--label-column", cl_label, "label column (negative counts from the end)");
  cl->add_option("--methods", cl_methods, "comma-separated methods (default META-DES.Oracle)");
  cl->add_option("-o,--out", cl_out, "prediction CSV");

  Overrides bench_o;
  auto* bench = app.add_subcommand("benchmark", "run all replications and write the reports");
  add_common(bench, bench_o);
  bench->add_option("--methods", bench_o.methods, "comma-separated methods");
  bench->add_option("--replications", bench_o.replications, "override replication count");

  auto* freq = app.add_subcommand("freq-report", "selection frequency of saved masks");
  std::string masks_path;
  std::string freq_out;
  std::size_t freq_k = 7;
  std::size_t freq_kp = 5;
  freq->add_option("masks", masks_path, "file with one 0/1 mask per line")->required();
  freq->add_option("--k", freq_k, "region of competence size K");
  freq->add_option("--kp", freq_kp, "output profile neighborhood size Kp");
  freq->add_option("-o,--out", freq_out, "output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return gen_p2(gen_n, gen_seed, gen_out);
    if (*tr) return train(train_o, *tr, model_path, dump_meta);
    if (*cl) return classify_cmd(cl_model, cl_data, cl_label, cl_methods, cl_out);
    if (*bench) return benchmark(bench_o, *bench);
    if (*freq) return freq_report(masks_path, freq_k, freq_kp, freq_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
