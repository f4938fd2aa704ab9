#include "metades/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "metades/random.hpp"

namespace metades {

Dataset::Dataset(std::size_t feature_count, std::size_t class_count)
    : feature_count_(feature_count), class_count_(class_count) {
  if (feature_count == 0) throw std::invalid_argument("dataset needs at least one feature");
  if (class_count < 2) throw std::invalid_argument("dataset needs at least two classes");
}

void Dataset::add(std::span<const double> features, int label) {
  if (features.size() != feature_count_) {
    throw std::invalid_argument("sample has " + std::to_string(features.size()) +
                                " features, expected " + std::to_string(feature_count_));
  }
  if (label < 0 || static_cast<std::size_t>(label) >= class_count_) {
    throw std::invalid_argument("label " + std::to_string(label) + " outside [0, " +
                                std::to_string(class_count_) + ")");
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
  }
  features_.insert(features_.end(), features.begin(), features.end());
  labels_.push_back(label);
}

void Dataset::set_class_names(std::vector<std::string> names) {
  if (!names.empty() && names.size() != class_count_) {
    throw std::invalid_argument("class name count does not match class count");
  }
  class_names_ = std::move(names);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(feature_count_, class_count_);
  out.class_names_ = class_names_;
  out.features_.reserve(indices.size() * feature_count_);
  out.labels_.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw std::out_of_range("subset index out of range");
    const auto r = row(i);
    out.features_.insert(out.features_.end(), r.begin(), r.end());
    out.labels_.push_back(labels_[i]);
  }
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_count_, 0);
  for (int l : labels_) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

struct RawTable {
  std::vector<std::vector<double>> features;
  std::vector<std::string> labels;
  std::size_t feature_count = 0;
};

RawTable read_table(const std::filesystem::path& path, int label_column) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path.string());

  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::size_t label_idx = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (first) {
      columns = cells.size();
      if (columns < 2) {
        throw CsvError(path.string() + ":" + std::to_string(line_no) +
                       ": need at least one feature column and a label column");
      }
      const long idx = label_column < 0 ? static_cast<long>(columns) + label_column
                                        : static_cast<long>(label_column);
      if (idx < 0 || idx >= static_cast<long>(columns)) {
        throw CsvError("label column " + std::to_string(label_column) + " out of range for " +
                       std::to_string(columns) + " columns");
      }
      label_idx = static_cast<std::size_t>(idx);
      table.feature_count = columns - 1;
    } else if (cells.size() != columns) {
      throw CsvError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                     std::to_string(columns) + " columns, found " + std::to_string(cells.size()));
    }

    std::vector<double> row;
    row.reserve(columns - 1);
    bool header = false;
    for (std::size_t c = 0; c < columns; ++c) {
      if (c == label_idx) continue;
      const auto v = parse_number(cells[c]);
      if (!v) {
        if (first) {
          header = true;
          break;
        }
        throw CsvError(path.string() + ": row " + std::to_string(line_no) + ", column " +
                       std::to_string(c + 1) + ": '" + cells[c] + "' is not a number");
      }
      row.push_back(*v);
    }
    first = false;
    if (header) continue;
    if (cells[label_idx].empty()) {
      throw CsvError(path.string() + ": row " + std::to_string(line_no) + ", column " +
                     std::to_string(label_idx + 1) + ": empty label");
    }
    table.features.push_back(std::move(row));
    table.labels.push_back(cells[label_idx]);
  }
  if (table.labels.empty()) throw CsvError(path.string() + ": no data rows");
  return table;
}

Dataset build(const RawTable& table, const std::vector<std::string>& names,
              const std::map<std::string, int>& codes) {
  Dataset ds(table.feature_count, names.size());
  ds.set_class_names(names);
  for (std::size_t i = 0; i < table.labels.size(); ++i) {
    ds.add(table.features[i], codes.at(table.labels[i]));
  }
  return ds;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, int label_column) {
  const auto table = read_table(path, label_column);
  std::vector<std::string> names;
  std::map<std::string, int> codes;
  for (const auto& symbol : table.labels) {
    if (codes.emplace(symbol, static_cast<int>(names.size())).second) names.push_back(symbol);
  }
  if (names.size() < 2) {
    throw CsvError(path.string() + ": only one class ('" + names.front() +
                   "') present; classification is degenerate");
  }
  return build(table, names, codes);
}

Dataset load_csv_with_classes(const std::filesystem::path& path, int label_column,
                              const std::vector<std::string>& class_names) {
  const auto table = read_table(path, label_column);
  std::map<std::string, int> codes;
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    codes.emplace(class_names[i], static_cast<int>(i));
  }
  for (std::size_t i = 0; i < table.labels.size(); ++i) {
    if (!codes.contains(table.labels[i])) {
      throw CsvError(path.string() + ": data row " + std::to_string(i + 1) + ": unknown class '" +
                     table.labels[i] + "'");
    }
  }
  return build(table, class_names, codes);
}

void write_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t j = 0; j < ds.feature_count(); ++j) out << "x" << j << ',';
  out << "label\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.row(i)) out << v << ',';
    const int l = ds.label(i);
    if (ds.class_names().empty()) {
      out << l << '\n';
    } else {
      out << ds.class_names()[static_cast<std::size_t>(l)] << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Stratified holdout

void SplitSpec::validate() const {
  for (double f : {train_frac, dsel_frac, test_frac, meta_frac_of_train}) {
    if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("split fractions must lie in (0, 1)");
  }
  if (std::abs(train_frac + dsel_frac + test_frac - 1.0) > 1e-9) {
    throw std::invalid_argument("train, dsel and test fractions must sum to 1");
  }
}

namespace {

// Largest-remainder rounding of `total * weights` into integers summing to
// `total`. Equal remainders go to the bucket with the largest outstanding
// deficit, then to the lowest index.
std::vector<std::size_t> apportion(std::size_t total, std::span<const double> weights,
                                   std::span<const double> deficit) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> out(n);
  std::vector<double> remainder(n);
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const double ideal = static_cast<double>(total) * weights[s];
    out[s] = static_cast<std::size_t>(std::floor(ideal + 1e-9));
    remainder[s] = ideal - static_cast<double>(out[s]);
    assigned += out[s];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (std::abs(remainder[a] - remainder[b]) > 1e-9) return remainder[a] > remainder[b];
    return deficit[a] > deficit[b];
  });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k % n]];
  return out;
}

}  // namespace

HoldoutSplit split_holdout(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  const std::size_t L = ds.class_count();

  std::vector<std::vector<std::size_t>> by_class(L);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.label(i))].push_back(i);
  }
  for (std::size_t c = 0; c < L; ++c) {
    if (by_class[c].size() < 4) {
      const std::string name = ds.class_names().empty() ? std::to_string(c) : ds.class_names()[c];
      throw std::invalid_argument("class '" + name + "' has " + std::to_string(by_class[c].size()) +
                                  " samples; at least 4 are needed (one per split)");
    }
  }

  // Buckets: 0 train, 1 meta-train, 2 dsel, 3 test.
  const double train_only = spec.train_frac * (1.0 - spec.meta_frac_of_train);
  const double meta = spec.train_frac * spec.meta_frac_of_train;
  const std::array<double, 3> outer = {spec.train_frac, spec.dsel_frac, spec.test_frac};
  const std::array<double, 2> inner = {1.0 - spec.meta_frac_of_train, spec.meta_frac_of_train};

  std::array<double, 3> outer_target{};
  for (std::size_t s = 0; s < 3; ++s) outer_target[s] = static_cast<double>(ds.size()) * outer[s];
  std::array<double, 2> inner_target = {static_cast<double>(ds.size()) * train_only,
                                        static_cast<double>(ds.size()) * meta};
  std::array<double, 3> outer_assigned{};
  std::array<double, 2> inner_assigned{};

  HoldoutSplit split;
  Rng rng(spec.seed);
  for (std::size_t c = 0; c < L; ++c) {
    auto members = by_class[c];
    shuffle(members, rng);
    const std::size_t n = members.size();

    std::array<double, 3> outer_deficit{};
    for (std::size_t s = 0; s < 3; ++s) {
      outer_deficit[s] = outer_target[s] - outer_assigned[s] - static_cast<double>(n) * outer[s];
    }
    auto sizes3 = apportion(n, outer, outer_deficit);

    std::array<double, 2> inner_deficit{};
    for (std::size_t s = 0; s < 2; ++s) {
      inner_deficit[s] = inner_target[s] - inner_assigned[s] -
                         static_cast<double>(sizes3[0]) * inner[s];
    }
    auto sizes2 = apportion(sizes3[0], inner, inner_deficit);

    std::array<std::size_t, 4> sizes = {sizes2[0], sizes2[1], sizes3[1], sizes3[2]};
    // Every split receives at least one sample of every class.
    for (std::size_t s = 0; s < 4; ++s) {
      while (sizes[s] == 0) {
        const auto donor = static_cast<std::size_t>(
            std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
        --sizes[donor];
        ++sizes[s];
      }
    }
    for (std::size_t s = 0; s < 3; ++s) {
      outer_assigned[s] += static_cast<double>(s == 0 ? sizes[0] + sizes[1] : sizes[s + 1]);
    }
    inner_assigned[0] += static_cast<double>(sizes[0]);
    inner_assigned[1] += static_cast<double>(sizes[1]);

    std::size_t pos = 0;
    for (std::size_t s = 0; s < 4; ++s) {
      for (std::size_t k = 0; k < sizes[s]; ++k) split.indices[s].push_back(members[pos++]);
    }
  }
  for (auto& idx : split.indices) std::sort(idx.begin(), idx.end());
  split.train = ds.subset(split.indices[0]);
  split.meta_train = ds.subset(split.indices[1]);
  split.dsel = ds.subset(split.indices[2]);
  split.test = ds.subset(split.indices[3]);
  return split;
}

// ---------------------------------------------------------------------------
// Scaling

double ScaleParams::apply(std::size_t column, double value) const {
  const double lo = min[column];
  const double hi = max[column];
  if (hi <= lo) return 0.5;
  return std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
}

std::vector<double> ScaleParams::apply(std::span<const double> x) const {
  if (x.size() != min.size()) throw std::invalid_argument("scale: dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = apply(j, x[j]);
  return out;
}

Dataset ScaleParams::apply(const Dataset& ds) const {
  if (ds.feature_count() != min.size()) throw std::invalid_argument("scale: dimension mismatch");
  Dataset out = ds;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto r = out.mutable_row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = apply(j, r[j]);
  }
  return out;
}

ScaleParams fit_minmax(const Dataset& ds) {
  ScaleParams p;
  p.min.assign(ds.feature_count(), std::numeric_limits<double>::infinity());
  p.max.assign(ds.feature_count(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto r = ds.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      p.min[j] = std::min(p.min[j], r[j]);
      p.max[j] = std::max(p.max[j], r[j]);
    }
  }
  return p;
}

std::pair<Dataset, ScaleParams> scale_minmax(const Dataset& ds) {
  auto params = fit_minmax(ds);
  auto scaled = params.apply(ds);
  return {std::move(scaled), std::move(params)};
}

// ---------------------------------------------------------------------------
// P2

namespace p2 {

double boundary1(double x) { return std::sin(x) + 5.0; }
double boundary2(double x) { return (x - 2.0) * (x - 2.0) + 1.0; }
double boundary3(double x) { return -0.1 * x * x + 0.6 * std::sin(4.0 * x) + 8.0; }
double boundary4(double x) { return (x - 10.0) * (x - 10.0) / 2.0 + 7.902; }

int label_of(double x, double y) {
  int above = 0;
  above += y > boundary1(x);
  above += y > boundary2(x);
  above += y > boundary3(x);
  above += y > boundary4(x);
  return above % 2;
}

}  // namespace p2

Dataset generate_p2(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("generate_p2: n must be at least 1");
  Dataset ds(2, 2);
  std::array<std::size_t, 2> quota = {(n + 1) / 2, n / 2};
  Rng rng(seed);
  while (ds.size() < n) {
    const double x = uniform(rng, 0.0, 10.0);
    const double y = uniform(rng, 0.0, 10.0);
    const int label = p2::label_of(x, y);
    auto& q = quota[static_cast<std::size_t>(label)];
    if (q == 0) continue;
    --q;
    const std::array<double, 2> point = {x, y};
    ds.add(point, label);
  }
  ds.set_class_names({"0", "1"});
  return ds;
}

}  // namespace metades
