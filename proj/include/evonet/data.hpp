#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace evonet {

/// A normalized pattern set. Inputs and targets are row-major matrices;
/// after normalize() all values lie in [0, 1]. Immutable once built.
struct Dataset {
  std::string name;
  std::size_t input_width = 0;
  std::size_t target_width = 0;
  std::vector<double> inputs;   // pattern_count x input_width
  std::vector<double> targets;  // pattern_count x target_width
  std::vector<std::string> column_names;
  std::vector<std::string> class_labels;  // original labels, when categorical
  std::vector<std::pair<double, double>> input_ranges;  // pre-normalization min/max

  std::size_t pattern_count() const {
    return input_width == 0 ? 0 : inputs.size() / input_width;
  }
  std::span<const double> input_row(std::size_t r) const {
    return {inputs.data() + r * input_width, input_width};
  }
  std::span<const double> target_row(std::size_t r) const {
    return {targets.data() + r * target_width, target_width};
  }
  /// Class of a pattern: argmax of the target row for multi-output sets,
  /// 0/1 threshold at 0.5 for single-output sets.
  int class_of(std::size_t r) const;
  std::size_t class_count() const;
};

struct CsvSchema {
  std::vector<std::size_t> target_columns;  // 0-based column indices
  bool one_hot = false;
  bool header = false;
};

struct LoadReport {
  std::size_t rows_loaded = 0;
  std::size_t rows_dropped_missing = 0;
};

/// Parses a comma-separated file; '?' and empty cells are missing values and
/// drop the row (counted in the report). Categorical targets become one-hot
/// columns when the schema asks for it, otherwise a single 0/1 column.
/// Throws ParseError, InconsistentWidth, EmptyFile.
Dataset load_csv(const std::string& path, const CsvSchema& schema,
                 LoadReport* report = nullptr);

/// Maps every input column through (x - min) / (max - min); constant columns
/// map to 0. Targets are untouched. Records the ranges on the result.
Dataset normalize(const Dataset& ds);

struct SplitFractions {
  double train = 1.0;
  double validation = 0.0;
  double test = 0.0;
};

/// Disjoint partition covering all patterns; deterministic in `seed`.
/// Stratified splits keep per-class proportions within one pattern.
/// Throws DegenerateSplit when a non-zero fraction receives no patterns.
std::array<Dataset, 3> split(const Dataset& ds, const SplitFractions& fractions,
                             bool stratified, std::uint64_t seed);

/// Rows of `ds` at `rows`, in order.
Dataset subset(const Dataset& ds, std::span<const std::size_t> rows);

/// Fold assignments for 5 iterations of 2-fold cross validation. A pure
/// function of (seed, dataset size, labels).
struct CvPlan {
  std::uint64_t seed = 0;
  bool stratified = true;
  // iterations[i] = the two halves of iteration i, as pattern indices.
  std::vector<std::array<std::vector<std::size_t>, 2>> iterations;
};

CvPlan make_cv_plan(const Dataset& ds, std::uint64_t seed,
                    bool stratified = true);

std::string cv_plan_to_json(const CvPlan& plan);

struct CvOutcome {
  std::vector<double> accuracies;  // 10 values, (iteration, fold) order
  double mean = 0.0;
  double stddev = 0.0;
};

/// Runs the 5x2cv protocol: per iteration, train on one half and test on the
/// other, both ways. `runner(train, test, iteration, fold)` returns the test
/// accuracy. Folds run on `parallel_jobs` threads (results are ordered and
/// deterministic regardless). Runner errors are rethrown with the fold
/// identity attached.
CvOutcome five_by_two_cv(
    const Dataset& ds,
    const std::function<double(const Dataset& train, const Dataset& test,
                               int iteration, int fold)>& runner,
    std::uint64_t seed, bool stratified = true, unsigned parallel_jobs = 1);

}  // namespace evonet
