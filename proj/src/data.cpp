#include "evonet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "evonet/errors.hpp"
#include "evonet/rng.hpp"

namespace evonet {

int Dataset::class_of(std::size_t r) const {
  const auto row = target_row(r);
  if (target_width == 1) return row[0] >= 0.5 ? 1 : 0;
  return static_cast<int>(
      std::max_element(row.begin(), row.end()) - row.begin());
}

std::size_t Dataset::class_count() const {
  std::set<int> classes;
  for (std::size_t r = 0; r < pattern_count(); ++r) classes.insert(class_of(r));
  return classes.size();
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "?"; }

bool parse_double(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema,
                 LoadReport* report) {
  std::ifstream file(path);
  if (!file) throw EmptyFile("cannot open " + path);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;
  std::vector<std::string> header;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_cells(line);
    if (schema.header && header.empty()) {
      header = std::move(cells);
      continue;
    }
    rows.push_back(std::move(cells));
    row_lines.push_back(line_no);
  }
  if (rows.empty()) throw EmptyFile(path + " has no data rows");

  const std::size_t width = rows[0].size();
  for (std::size_t r = 1; r < rows.size(); ++r)
    if (rows[r].size() != width)
      throw InconsistentWidth(path + ": line " + std::to_string(row_lines[r]) +
                              " has " + std::to_string(rows[r].size()) +
                              " columns, expected " + std::to_string(width));
  for (std::size_t c : schema.target_columns)
    if (c >= width)
      throw ConfigError("target column " + std::to_string(c) +
                        " out of range for " + std::to_string(width) +
                        " columns");
  if (schema.target_columns.empty())
    throw ConfigError("schema needs at least one target column");
  if (schema.one_hot && schema.target_columns.size() != 1)
    throw ConfigError("one_hot applies to a single target column");

  // Drop rows with missing cells, keeping count.
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const bool missing = std::any_of(rows[r].begin(), rows[r].end(),
                                     [](const std::string& c) { return is_missing(c); });
    if (!missing) kept.push_back(r);
  }
  if (report) {
    report->rows_loaded = kept.size();
    report->rows_dropped_missing = rows.size() - kept.size();
  }
  if (kept.empty()) throw EmptyFile(path + ": all rows have missing values");

  std::vector<char> is_target(width, 0);
  for (std::size_t c : schema.target_columns) is_target[c] = 1;
  std::vector<std::size_t> input_cols;
  for (std::size_t c = 0; c < width; ++c)
    if (!is_target[c]) input_cols.push_back(c);
  if (input_cols.empty()) throw ConfigError("no input columns left");

  Dataset ds;
  ds.input_width = input_cols.size();

  // Inputs must be numeric.
  ds.inputs.reserve(kept.size() * ds.input_width);
  for (std::size_t r : kept) {
    for (std::size_t c : input_cols) {
      double v;
      if (!parse_double(rows[r][c], v))
        throw ParseError(path + ": malformed numeric cell '" + rows[r][c] + "'",
                         row_lines[r], c + 1);
      ds.inputs.push_back(v);
    }
  }

  // Targets: numeric columns already in [0,1] pass through; categorical
  // columns become one-hot (when requested) or a single 0/1 column for
  // two-label problems.
  if (schema.one_hot) {
    const std::size_t col = schema.target_columns[0];
    std::set<std::string> labels;
    for (std::size_t r : kept) labels.insert(rows[r][col]);
    ds.class_labels.assign(labels.begin(), labels.end());
    ds.target_width = ds.class_labels.size();
    ds.targets.assign(kept.size() * ds.target_width, 0.0);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const auto& cell = rows[kept[i]][col];
      const std::size_t k =
          std::lower_bound(ds.class_labels.begin(), ds.class_labels.end(),
                           cell) -
          ds.class_labels.begin();
      ds.targets[i * ds.target_width + k] = 1.0;
    }
  } else {
    ds.target_width = schema.target_columns.size();
    ds.targets.assign(kept.size() * ds.target_width, 0.0);
    for (std::size_t t = 0; t < schema.target_columns.size(); ++t) {
      const std::size_t col = schema.target_columns[t];
      bool numeric01 = true;
      for (std::size_t r : kept) {
        double v;
        if (!parse_double(rows[r][col], v) || v < 0.0 || v > 1.0) {
          numeric01 = false;
          break;
        }
      }
      if (numeric01) {
        for (std::size_t i = 0; i < kept.size(); ++i) {
          double v;
          parse_double(rows[kept[i]][col], v);
          ds.targets[i * ds.target_width + t] = v;
        }
      } else {
        std::set<std::string> labels;
        for (std::size_t r : kept) labels.insert(rows[r][col]);
        if (labels.size() != 2)
          throw ConfigError(path + ": target column " + std::to_string(col) +
                            " has " + std::to_string(labels.size()) +
                            " distinct labels; use one_hot for multi-class");
        ds.class_labels.assign(labels.begin(), labels.end());
        for (std::size_t i = 0; i < kept.size(); ++i)
          ds.targets[i * ds.target_width + t] =
              rows[kept[i]][col] == ds.class_labels[1] ? 1.0 : 0.0;
      }
    }
  }

  // Column names from the header when present, synthesized otherwise.
  for (std::size_t c : input_cols)
    ds.column_names.push_back(c < header.size() ? header[c]
                                                : "col" + std::to_string(c));
  return ds;
}

Dataset normalize(const Dataset& ds) {
  if (ds.pattern_count() == 0) throw EmptyDataset("normalize: no patterns");
  Dataset out = ds;
  out.input_ranges.resize(ds.input_width);
  const std::size_t n = ds.pattern_count();
  for (std::size_t c = 0; c < ds.input_width; ++c) {
    double lo = ds.inputs[c], hi = ds.inputs[c];
    for (std::size_t r = 1; r < n; ++r) {
      const double v = ds.inputs[r * ds.input_width + c];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    out.input_ranges[c] = {lo, hi};
    const double span = hi - lo;
    for (std::size_t r = 0; r < n; ++r) {
      double& v = out.inputs[r * ds.input_width + c];
      v = span > 0.0 ? (v - lo) / span : 0.0;
    }
  }
  return out;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.name = ds.name;
  out.input_width = ds.input_width;
  out.target_width = ds.target_width;
  out.column_names = ds.column_names;
  out.class_labels = ds.class_labels;
  out.input_ranges = ds.input_ranges;
  out.inputs.reserve(rows.size() * ds.input_width);
  out.targets.reserve(rows.size() * ds.target_width);
  for (std::size_t r : rows) {
    const auto in = ds.input_row(r);
    const auto tg = ds.target_row(r);
    out.inputs.insert(out.inputs.end(), in.begin(), in.end());
    out.targets.insert(out.targets.end(), tg.begin(), tg.end());
  }
  return out;
}

namespace {

std::map<int, std::vector<std::size_t>> indices_by_class(const Dataset& ds) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t r = 0; r < ds.pattern_count(); ++r)
    by_class[ds.class_of(r)].push_back(r);
  return by_class;
}

void shuffle_indices(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng.index(i)]);
}

}  // namespace

std::array<Dataset, 3> split(const Dataset& ds, const SplitFractions& fractions,
                             bool stratified, std::uint64_t seed) {
  const double sum = fractions.train + fractions.validation + fractions.test;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");
  if (fractions.train < 0 || fractions.validation < 0 || fractions.test < 0)
    throw ConfigError("split fractions must be non-negative");

  Rng rng(seed);
  std::array<std::vector<std::size_t>, 3> parts;
  const double fr[3] = {fractions.train, fractions.validation, fractions.test};

  auto apportion = [&](std::vector<std::size_t>& pool) {
    shuffle_indices(pool, rng);
    const double m = static_cast<double>(pool.size());
    std::size_t count[3];
    double remainder[3];
    std::size_t assigned = 0;
    for (int p = 0; p < 3; ++p) {
      const double ideal = fr[p] * m;
      count[p] = static_cast<std::size_t>(ideal);
      remainder[p] = ideal - static_cast<double>(count[p]);
      assigned += count[p];
    }
    // Largest-remainder for the leftover patterns; ties favor earlier parts.
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainder[a] > remainder[b]; });
    for (std::size_t extra = 0; extra < pool.size() - assigned; ++extra)
      ++count[order[extra % 3]];
    std::size_t at = 0;
    for (int p = 0; p < 3; ++p)
      for (std::size_t i = 0; i < count[p]; ++i) parts[p].push_back(pool[at++]);
  };

  if (stratified) {
    for (auto& [cls, pool] : indices_by_class(ds)) apportion(pool);
  } else {
    std::vector<std::size_t> pool(ds.pattern_count());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    apportion(pool);
  }

  for (int p = 0; p < 3; ++p) {
    if (fr[p] > 0.0 && parts[p].empty())
      throw DegenerateSplit("split part " + std::to_string(p) +
                            " received no patterns");
    std::sort(parts[p].begin(), parts[p].end());
  }
  return {subset(ds, parts[0]), subset(ds, parts[1]), subset(ds, parts[2])};
}

CvPlan make_cv_plan(const Dataset& ds, std::uint64_t seed, bool stratified) {
  if (ds.pattern_count() < 2)
    throw DegenerateSplit("5x2cv needs at least 2 patterns");
  if (stratified)
    for (auto& [cls, pool] : indices_by_class(ds))
      if (pool.size() < 2)
        throw DegenerateSplit("5x2cv needs >= 2 patterns per class (class " +
                              std::to_string(cls) + " has " +
                              std::to_string(pool.size()) + ")");

  CvPlan plan;
  plan.seed = seed;
  plan.stratified = stratified;
  Rng rng(seed);

  for (int iteration = 0; iteration < 5; ++iteration) {
    std::array<std::vector<std::size_t>, 2> halves;
    if (stratified) {
      for (auto& [cls, pool_const] : indices_by_class(ds)) {
        std::vector<std::size_t> pool = pool_const;
        shuffle_indices(pool, rng);
        std::size_t a = pool.size() / 2;
        if (pool.size() % 2 == 1 && halves[0].size() <= halves[1].size())
          ++a;  // odd class: extra pattern to the smaller half
        halves[0].insert(halves[0].end(), pool.begin(), pool.begin() + a);
        halves[1].insert(halves[1].end(), pool.begin() + a, pool.end());
      }
    } else {
      std::vector<std::size_t> pool(ds.pattern_count());
      for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
      shuffle_indices(pool, rng);
      const std::size_t a = (pool.size() + 1) / 2;
      halves[0].assign(pool.begin(), pool.begin() + a);
      halves[1].assign(pool.begin() + a, pool.end());
    }
    std::sort(halves[0].begin(), halves[0].end());
    std::sort(halves[1].begin(), halves[1].end());
    plan.iterations.push_back(std::move(halves));
  }
  return plan;
}

std::string cv_plan_to_json(const CvPlan& plan) {
  nlohmann::ordered_json doc;
  doc["seed"] = plan.seed;
  doc["stratified"] = plan.stratified;
  doc["iterations"] = nlohmann::ordered_json::array();
  for (const auto& halves : plan.iterations)
    doc["iterations"].push_back({halves[0], halves[1]});
  return doc.dump(2) + "\n";
}

CvOutcome five_by_two_cv(
    const Dataset& ds,
    const std::function<double(const Dataset&, const Dataset&, int, int)>&
        runner,
    std::uint64_t seed, bool stratified, unsigned parallel_jobs) {
  const CvPlan plan = make_cv_plan(ds, seed, stratified);

  struct Task {
    int iteration;
    int fold;
    Dataset train;
    Dataset test;
  };
  std::vector<Task> tasks;
  tasks.reserve(10);
  for (int i = 0; i < 5; ++i) {
    Dataset half0 = subset(ds, plan.iterations[i][0]);
    Dataset half1 = subset(ds, plan.iterations[i][1]);
    tasks.push_back({i, 0, half0, half1});
    tasks.push_back({i, 1, std::move(half1), std::move(half0)});
  }

  std::vector<double> accuracies(tasks.size(), 0.0);
  std::vector<std::string> failures(tasks.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const Task& task = tasks[t];
      try {
        accuracies[t] = runner(task.train, task.test, task.iteration, task.fold);
      } catch (const std::exception& e) {
        failures[t] = e.what();
      }
    }
  };

  const unsigned jobs =
      std::max(1u, std::min<unsigned>(parallel_jobs, tasks.size()));
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (unsigned j = 0; j < jobs; ++j) threads.emplace_back(work);
    for (auto& th : threads) th.join();
  }

  for (std::size_t t = 0; t < tasks.size(); ++t)
    if (!failures[t].empty())
      throw Error("5x2cv iteration " + std::to_string(tasks[t].iteration) +
                  " fold " + std::to_string(tasks[t].fold) + ": " +
                  failures[t]);

  CvOutcome outcome;
  outcome.accuracies = accuracies;
  double sum = 0.0;
  for (double a : accuracies) sum += a;
  outcome.mean = sum / static_cast<double>(accuracies.size());
  double ss = 0.0;
  for (double a : accuracies) ss += (a - outcome.mean) * (a - outcome.mean);
  outcome.stddev =
      std::sqrt(ss / static_cast<double>(accuracies.size() - 1));
  return outcome;
}

}  // namespace evonet
