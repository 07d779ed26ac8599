#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <doctest.h>

#include "evonet/data.hpp"
#include "evonet/errors.hpp"
#include "support/builders.hpp"

using namespace evonet;
namespace tst = evonet::testing;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path);
  out << text;
  return path;
}

// Rows labeled round-robin over `classes`, first input column = row index.
// Multi-class targets are one-hot so class_of can recover them.
Dataset synthetic(std::size_t patterns, int classes) {
  Dataset ds;
  ds.input_width = 2;
  ds.target_width = classes <= 2 ? 1 : static_cast<std::size_t>(classes);
  for (std::size_t r = 0; r < patterns; ++r) {
    ds.inputs.push_back(static_cast<double>(r));
    ds.inputs.push_back(0.5);
    const int cls = static_cast<int>(r) % classes;
    if (classes <= 2) {
      ds.targets.push_back(static_cast<double>(cls));
    } else {
      for (int c = 0; c < classes; ++c)
        ds.targets.push_back(c == cls ? 1.0 : 0.0);
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("the bundled iris file loads with the documented shape") {
  CsvSchema schema;
  schema.target_columns = {4};
  schema.one_hot = true;
  schema.header = true;
  LoadReport report;
  const Dataset ds = load_csv("data/iris.csv", schema, &report);
  CHECK(ds.pattern_count() == 150);
  CHECK(ds.input_width == 4);
  CHECK(ds.target_width == 3);
  CHECK(report.rows_dropped_missing == 0);
  REQUIRE(ds.class_labels.size() == 3);
  CHECK(ds.class_labels[0] == "setosa");

  // 50 patterns per class.
  std::map<int, int> counts;
  for (std::size_t r = 0; r < ds.pattern_count(); ++r) ++counts[ds.class_of(r)];
  for (const auto& [cls, n] : counts) CHECK(n == 50);
}

TEST_CASE("the bundled breast cancer file loads as a binary problem") {
  CsvSchema schema;
  schema.target_columns = {30};
  schema.header = true;
  const Dataset ds = load_csv("data/breast_cancer.csv", schema, nullptr);
  CHECK(ds.pattern_count() == 569);
  CHECK(ds.input_width == 30);
  CHECK(ds.target_width == 1);
  REQUIRE(ds.class_labels.size() == 2);
  CHECK(ds.class_labels[0] == "benign");
  CHECK(ds.class_labels[1] == "malignant");
}

TEST_CASE("a malformed numeric cell reports its line") {
  const auto path = write_temp("evonet_bad.csv", "1.0,2.0,0\n1.0,oops,1\n");
  CsvSchema schema;
  schema.target_columns = {2};
  try {
    load_csv(path.string(), schema);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("rows with missing cells are dropped and counted") {
  const auto path = write_temp("evonet_missing.csv",
                               "1.0,2.0,0\n?,3.0,1\n4.0,,0\n5.0,6.0,1\n");
  CsvSchema schema;
  schema.target_columns = {2};
  LoadReport report;
  const Dataset ds = load_csv(path.string(), schema, &report);
  CHECK(ds.pattern_count() == 2);
  CHECK(report.rows_dropped_missing == 2);
}

TEST_CASE("ragged rows and empty files are rejected") {
  const auto ragged = write_temp("evonet_ragged.csv", "1,2,0\n1,2,3,0\n");
  CsvSchema schema;
  schema.target_columns = {2};
  CHECK_THROWS_AS(load_csv(ragged.string(), schema), InconsistentWidth);

  const auto empty = write_temp("evonet_empty.csv", "");
  CHECK_THROWS_AS(load_csv(empty.string(), schema), EmptyFile);
  CHECK_THROWS_AS(load_csv("/nonexistent/nope.csv", schema), EmptyFile);
}

TEST_CASE("normalization maps columns onto [0,1]") {
  Dataset ds = tst::dataset(2, 1, {2.0, 7.0, 4.0, 7.0, 6.0, 7.0}, {0, 1, 0});
  const Dataset n = normalize(ds);
  CHECK(n.inputs[0] == doctest::Approx(0.0));
  CHECK(n.inputs[2] == doctest::Approx(0.5));
  CHECK(n.inputs[4] == doctest::Approx(1.0));
  // Constant column collapses to zero.
  CHECK(n.inputs[1] == doctest::Approx(0.0));
  CHECK(n.inputs[3] == doctest::Approx(0.0));
  REQUIRE(n.input_ranges.size() == 2);
  CHECK(n.input_ranges[0].first == doctest::Approx(2.0));
  CHECK(n.input_ranges[0].second == doctest::Approx(6.0));

  // Idempotence.
  const Dataset nn = normalize(n);
  for (std::size_t i = 0; i < n.inputs.size(); ++i)
    CHECK(nn.inputs[i] == doctest::Approx(n.inputs[i]).epsilon(1e-15));
}

TEST_CASE("the 70/30 split lands exactly on the documented sizes") {
  const Dataset ds = synthetic(150, 3);
  const auto parts = split(ds, {0.7, 0.3, 0.0}, true, 5);
  CHECK(parts[0].pattern_count() == 105);
  CHECK(parts[1].pattern_count() == 45);
  CHECK(parts[2].pattern_count() == 0);
}

TEST_CASE("a train-only split keeps everything") {
  const Dataset ds = synthetic(37, 2);
  const auto parts = split(ds, {1.0, 0.0, 0.0}, true, 5);
  CHECK(parts[0].pattern_count() == 37);
  CHECK(parts[1].pattern_count() == 0);
  CHECK(parts[2].pattern_count() == 0);
}

TEST_CASE("splits partition the patterns exactly") {
  const Dataset ds = synthetic(101, 3);
  for (const bool stratified : {true, false}) {
    const auto parts = split(ds, {0.6, 0.2, 0.2}, stratified, 11);
    std::set<int> seen;
    std::size_t total = 0;
    for (const Dataset& part : parts) {
      total += part.pattern_count();
      for (std::size_t r = 0; r < part.pattern_count(); ++r)
        seen.insert(static_cast<int>(part.input_row(r)[0]));
    }
    CHECK(total == 101);
    CHECK(seen.size() == 101);  // each row claimed exactly once
  }
}

TEST_CASE("stratified halving balances every class") {
  const Dataset ds = synthetic(150, 3);
  const auto parts = split(ds, {0.5, 0.0, 0.5}, true, 17);
  for (const Dataset& half : {parts[0], parts[2]}) {
    std::map<int, int> counts;
    for (std::size_t r = 0; r < half.pattern_count(); ++r)
      ++counts[half.class_of(r)];
    for (const auto& [cls, n] : counts) CHECK(n == 25);
  }
}

TEST_CASE("degenerate splits are rejected") {
  const Dataset ds = synthetic(3, 1);
  CHECK_THROWS_AS(split(ds, {0.99, 0.01, 0.0}, false, 3), DegenerateSplit);
  CHECK_THROWS_AS(split(ds, {0.5, 0.2, 0.2}, false, 3), ConfigError);
}

TEST_CASE("split is deterministic in the seed") {
  const Dataset ds = synthetic(60, 3);
  const auto a = split(ds, {0.7, 0.0, 0.3}, true, 23);
  const auto b = split(ds, {0.7, 0.0, 0.3}, true, 23);
  CHECK(a[0].inputs == b[0].inputs);
  CHECK(a[2].inputs == b[2].inputs);
  const auto c = split(ds, {0.7, 0.0, 0.3}, true, 24);
  CHECK(a[0].inputs != c[0].inputs);
}

TEST_CASE("the 5x2 plan partitions and balances each iteration") {
  for (std::size_t patterns : {150u, 101u, 57u}) {
    const Dataset ds = synthetic(patterns, 3);
    const CvPlan plan = make_cv_plan(ds, 31, true);
    REQUIRE(plan.iterations.size() == 5);
    for (const auto& halves : plan.iterations) {
      CHECK(halves[0].size() + halves[1].size() == patterns);
      const long diff = static_cast<long>(halves[0].size()) -
                        static_cast<long>(halves[1].size());
      CHECK(std::abs(diff) <= 1);

      std::set<std::size_t> seen;
      std::map<int, long> balance;
      for (std::size_t idx : halves[0]) {
        seen.insert(idx);
        ++balance[ds.class_of(idx)];
      }
      for (std::size_t idx : halves[1]) {
        seen.insert(idx);
        --balance[ds.class_of(idx)];
      }
      CHECK(seen.size() == patterns);
      for (const auto& [cls, d] : balance) CHECK(std::abs(d) <= 1);
    }
  }
}

TEST_CASE("plans are pure functions of the seed") {
  const Dataset ds = synthetic(80, 2);
  const CvPlan a = make_cv_plan(ds, 77, true);
  const CvPlan b = make_cv_plan(ds, 77, true);
  for (int i = 0; i < 5; ++i) {
    CHECK(a.iterations[i][0] == b.iterations[i][0]);
    CHECK(a.iterations[i][1] == b.iterations[i][1]);
  }
}

TEST_CASE("a majority-class runner scores one third on balanced halves") {
  const Dataset ds = synthetic(150, 3);
  const auto runner = [](const Dataset& train, const Dataset& test, int, int) {
    // Predict class 0 everywhere.
    (void)train;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < test.pattern_count(); ++r)
      hits += test.class_of(r) == 0;
    return static_cast<double>(hits) / static_cast<double>(test.pattern_count());
  };
  const CvOutcome outcome = five_by_two_cv(ds, runner, 41, true);
  REQUIRE(outcome.accuracies.size() == 10);
  for (double a : outcome.accuracies) CHECK(a == doctest::Approx(1.0 / 3.0));
  CHECK(outcome.mean == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("fold errors carry the fold identity") {
  const Dataset ds = synthetic(40, 2);
  const auto runner = [](const Dataset&, const Dataset&, int iteration, int fold) {
    if (iteration == 1 && fold == 1) throw std::runtime_error("boom");
    return 0.5;
  };
  try {
    five_by_two_cv(ds, runner, 43, true);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("iteration 1") != std::string::npos);
    CHECK(what.find("fold 1") != std::string::npos);
    CHECK(what.find("boom") != std::string::npos);
  }
}

TEST_CASE("parallel folds produce the sequential result") {
  const Dataset ds = synthetic(90, 3);
  const auto runner = [](const Dataset& train, const Dataset& test,
                         int iteration, int fold) {
    return static_cast<double>(train.pattern_count()) /
               static_cast<double>(test.pattern_count() + 1) +
           iteration * 0.01 + fold * 0.001;
  };
  const CvOutcome seq = five_by_two_cv(ds, runner, 47, true, 1);
  const CvOutcome par = five_by_two_cv(ds, runner, 47, true, 8);
  CHECK(seq.accuracies == par.accuracies);
}

TEST_CASE("cv plans serialize for audit") {
  const Dataset ds = synthetic(10, 2);
  const CvPlan plan = make_cv_plan(ds, 51, true);
  const std::string text = cv_plan_to_json(plan);
  CHECK(text.find("\"seed\": 51") != std::string::npos);
  CHECK(text.find("\"iterations\"") != std::string::npos);
}
