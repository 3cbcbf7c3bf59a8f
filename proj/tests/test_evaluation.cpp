#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "evaluation.hpp"
#include "report.hpp"
#include "test_util.hpp"

using namespace tvode;
using namespace tvode::eval;

namespace {

std::vector<std::string> labels_of(std::size_t a, std::size_t b, const std::string& la = "MI",
                                   const std::string& lb = "HC") {
  std::vector<std::string> out(a, la);
  out.insert(out.end(), b, lb);
  return out;
}

svm::SvmConfig linear_cfg(double C) {
  svm::SvmConfig c;
  c.kernel.type = svm::KernelType::Linear;
  c.C = C;
  return c;
}

// Two well separated Gaussian blobs.
void blobs(std::size_t per_class, double sd, std::uint64_t seed, svm::FeatureRows& rows,
           std::vector<std::string>& labels) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sd);
  for (std::size_t i = 0; i < per_class; ++i) {
    rows.push_back({noise(rng), noise(rng)});
    labels.push_back("HC");
    rows.push_back({3.0 + noise(rng), 3.0 + noise(rng)});
    labels.push_back("MI");
  }
}

Trainer majority_trainer() {
  return [](const svm::FeatureRows&, std::span<const std::string> labels, const svm::SvmConfig&) -> Predictor {
    std::map<std::string, std::size_t> counts;
    for (const auto& l : labels) ++counts[l];
    std::string best;
    std::size_t n = 0;
    for (const auto& [l, c] : counts)
      if (c > n) {
        best = l;
        n = c;
      }
    return [best](std::span<const double>) { return best; };
  };
}

}  // namespace

TEST_CASE("binary metrics from a hand confusion matrix") {
  const ConfusionMatrix cm({"MI", "HC"}, {{9, 1}, {2, 8}});
  const auto m = metrics_binary(cm, "MI");
  CHECK(*m.sensitivity == 9.0 / 10.0);
  CHECK(*m.specificity == 8.0 / 10.0);
  CHECK(*m.accuracy == 17.0 / 20.0);
  CHECK(*m.sensitivity == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(*m.specificity == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(*m.accuracy == doctest::Approx(0.85).epsilon(1e-15));

  // The positive class may sit at either index.
  const ConfusionMatrix swapped({"HC", "MI"}, {{8, 2}, {1, 9}});
  const auto s = metrics_binary(swapped, "MI");
  CHECK(*s.sensitivity == *m.sensitivity);
  CHECK(*s.specificity == *m.specificity);
}

TEST_CASE("perfect predictions give unit metrics") {
  const ConfusionMatrix cm({"MI", "HC"}, {{5, 0}, {0, 7}});
  const auto m = metrics_binary(cm, "MI");
  CHECK(*m.sensitivity == 1.0);
  CHECK(*m.specificity == 1.0);
  CHECK(*m.accuracy == 1.0);
}

TEST_CASE("empty denominators are undefined, not zero") {
  const ConfusionMatrix cm({"MI", "HC"}, {{0, 0}, {1, 3}});
  const auto m = metrics_binary(cm, "MI");
  CHECK_FALSE(m.sensitivity.has_value());
  CHECK(*m.specificity == 0.75);
  CHECK(*m.accuracy == 0.75);
  CHECK(format_metric(m.sensitivity) == "n/a");

  const auto empty = metrics_binary(ConfusionMatrix({"MI", "HC"}), "MI");
  CHECK_FALSE(empty.accuracy.has_value());

  const ConfusionMatrix multi({"A", "B", "C"}, {{1, 0, 0}, {0, 0, 0}, {0, 1, 1}});
  const auto mm = metrics_multiclass(multi);
  CHECK(*mm.sensitivity[0] == 1.0);
  CHECK_FALSE(mm.sensitivity[1].has_value());
  CHECK(*mm.sensitivity[2] == 0.5);
}

TEST_CASE("multiclass metrics from hand confusion matrices") {
  const ConfusionMatrix cm({"A", "B", "C"}, {{2, 1, 0}, {0, 3, 0}, {1, 0, 4}});
  const auto m = metrics_multiclass(cm);
  REQUIRE(m.sensitivity.size() == 3);
  CHECK(*m.sensitivity[0] == 2.0 / 3.0);
  CHECK(*m.sensitivity[1] == 1.0);
  CHECK(*m.sensitivity[2] == 4.0 / 5.0);
  CHECK(*m.accuracy == 9.0 / 11.0);
  CHECK(cm.total() == 11);

  std::vector<std::vector<std::size_t>> eye(6, std::vector<std::size_t>(6, 0));
  for (std::size_t i = 0; i < 6; ++i) eye[i][i] = i + 1;
  const auto id = metrics_multiclass(ConfusionMatrix({"MI", "VHD", "DY", "BBB", "CH", "HC"}, eye));
  for (const auto& s : id.sensitivity) CHECK(*s == 1.0);
  CHECK(*id.accuracy == 1.0);
}

TEST_CASE("confusion matrix shape and label errors") {
  CHECK_ERROR_CODE(ConfusionMatrix({"A", "B"}, {{1, 2}}), ErrorCode::DimensionMismatch);
  CHECK_ERROR_CODE(ConfusionMatrix({"A", "B"}, {{1, 2}, {3}}), ErrorCode::DimensionMismatch);
  ConfusionMatrix cm({"A", "B"});
  CHECK_ERROR_CODE(cm.add("A", "Z"), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(metrics_binary(ConfusionMatrix({"A", "B", "C"}), "A"), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(metrics_binary(cm, "Z"), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(metrics_multiclass(ConfusionMatrix({"A"})), ErrorCode::InvalidArgument);
}

TEST_CASE("metrics are invariant to the order rows are tallied") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> classes{"A", "B", "C"};
  std::vector<std::pair<std::string, std::string>> pairs;
  std::uniform_int_distribution<int> pick(0, 2);
  for (int i = 0; i < 200; ++i) pairs.emplace_back(classes[pick(rng)], classes[pick(rng)]);
  ConfusionMatrix a(classes);
  for (const auto& [t, p] : pairs) a.add(t, p);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  ConfusionMatrix b(classes);
  for (const auto& [t, p] : pairs) b.add(t, p);
  const auto ma = metrics_multiclass(a), mb = metrics_multiclass(b);
  CHECK(ma.accuracy == mb.accuracy);
  CHECK(ma.sensitivity == mb.sensitivity);
}

TEST_CASE("stratified folds: one of each class per fold") {
  const auto labels = labels_of(10, 10);
  const auto fold = stratified_kfold(labels, 10, 42);
  REQUIRE(fold.size() == 20);
  for (std::size_t f = 0; f < 10; ++f) {
    std::size_t mi = 0, hc = 0;
    for (std::size_t r = 0; r < 20; ++r)
      if (fold[r] == f) (labels[r] == "MI" ? mi : hc)++;
    CHECK(mi == 1);
    CHECK(hc == 1);
  }
  CHECK(stratified_kfold(labels, 10, 42) == fold);
  CHECK(stratified_kfold(labels, 10, 43) != fold);
}

TEST_CASE("stratified folds over the paper's record counts") {
  const auto labels = labels_of(368, 80);
  const auto fold = stratified_kfold(labels, 10, 20140101);
  std::vector<std::size_t> size(10, 0), mi(10, 0), hc(10, 0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    REQUIRE(fold[r] < 10);
    ++size[fold[r]];
    (labels[r] == "MI" ? mi : hc)[fold[r]]++;
  }
  std::multiset<std::size_t> sizes(size.begin(), size.end());
  CHECK(sizes.count(44) == 2);
  CHECK(sizes.count(45) == 8);
  CHECK(*std::max_element(mi.begin(), mi.end()) - *std::min_element(mi.begin(), mi.end()) <= 1);
  CHECK(*std::max_element(hc.begin(), hc.end()) - *std::min_element(hc.begin(), hc.end()) <= 1);
}

TEST_CASE("stratified folds: balance for uneven three-class data") {
  std::vector<std::string> labels = labels_of(17, 9, "A", "B");
  labels.insert(labels.end(), 5, "C");
  for (std::size_t k : {2u, 3u, 4u, 5u}) {
    const auto fold = stratified_kfold(labels, k, 1);
    std::vector<std::size_t> size(k, 0);
    std::map<std::string, std::vector<std::size_t>> per_class;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      ++size[fold[r]];
      per_class[labels[r]].resize(k, 0);
      ++per_class[labels[r]][fold[r]];
    }
    CHECK(*std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end()) <= 1);
    for (const auto& [_, counts] : per_class)
      CHECK(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()) <= 1);
  }
}

TEST_CASE("stratified folds: errors") {
  const auto labels = labels_of(5, 5);
  CHECK_ERROR_CODE(stratified_kfold(labels, 1, 0), ErrorCode::TooFewRows);
  CHECK_ERROR_CODE(stratified_kfold(labels, 0, 0), ErrorCode::TooFewRows);
  CHECK_ERROR_CODE(stratified_kfold(labels, 11, 0), ErrorCode::TooFewRows);
  const std::vector<std::string> groups(3, "s");
  CHECK_ERROR_CODE(stratified_kfold(labels, 2, 0, groups), ErrorCode::DimensionMismatch);
}

TEST_CASE("subject groups stay within one fold") {
  std::vector<std::string> labels, groups;
  for (int s = 0; s < 24; ++s) {
    const int n = 1 + s % 3;
    for (int i = 0; i < n; ++i) {
      labels.push_back(s % 2 ? "MI" : "HC");
      groups.push_back("subject" + std::to_string(s));
    }
  }
  const auto fold = stratified_kfold(labels, 4, 9, groups);
  std::map<std::string, std::set<std::size_t>> folds_of;
  for (std::size_t r = 0; r < labels.size(); ++r) folds_of[groups[r]].insert(fold[r]);
  for (const auto& [_, f] : folds_of) CHECK(f.size() == 1);
  CHECK_ERROR_CODE(stratified_kfold(labels, 25, 9, groups), ErrorCode::TooFewRows);
}

TEST_CASE("run_cv: every row lands in exactly one test fold") {
  svm::FeatureRows rows;
  std::vector<std::string> labels;
  blobs(25, 0.5, 3, rows, labels);
  const std::vector<svm::SvmConfig> grid{linear_cfg(1.0)};
  const auto report = run_cv(rows, labels, 5, grid, 11, {});
  REQUIRE(report.folds.size() == 5);
  std::size_t tested = 0, trained = 0;
  for (const auto& f : report.folds) {
    tested += f.test.total();
    trained += f.train.total();
  }
  CHECK(tested == rows.size());
  CHECK(trained == rows.size() * 4);
}

TEST_CASE("run_cv: majority-class classifier on a 90/10 split") {
  const auto labels = labels_of(10, 90);
  svm::FeatureRows rows(labels.size(), std::vector<double>{0.0});
  CvOptions opt;
  opt.trainer = majority_trainer();
  opt.positive = "MI";
  const std::vector<svm::SvmConfig> grid{linear_cfg(1.0)};
  const auto report = run_cv(rows, labels, 10, grid, 5, opt);
  for (const auto& m : report.test_binary) {
    CHECK(*m.accuracy == 0.9);
    CHECK(*m.sensitivity == 0.0);
    CHECK(*m.specificity == 1.0);
  }
  CHECK(*report.mean_test_binary.accuracy == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(*report.mean_test_binary.sensitivity == 0.0);
  CHECK(*report.mean_test_binary.specificity == 1.0);
}

TEST_CASE("run_cv: separable features classify perfectly") {
  svm::FeatureRows rows;
  std::vector<std::string> labels;
  blobs(30, 0.3, 8, rows, labels);
  const std::vector<svm::SvmConfig> grid{linear_cfg(1.0)};
  const auto report = run_cv(rows, labels, 10, grid, 1, {});
  CHECK(*report.mean_test_binary.accuracy == 1.0);
  CHECK(*report.mean_train_binary.accuracy == 1.0);
  CHECK(report.classes == std::vector<std::string>{"MI", "HC"});
  CHECK(report.positive == "MI");
}

TEST_CASE("run_cv: reported means equal the per-fold average") {
  svm::FeatureRows rows;
  std::vector<std::string> labels;
  blobs(40, 1.6, 21, rows, labels);
  const std::vector<svm::SvmConfig> grid{linear_cfg(0.5), linear_cfg(5.0)};
  const auto report = run_cv(rows, labels, 10, grid, 2, {});
  double acc = 0.0, se = 0.0, sp = 0.0;
  for (const auto& m : report.test_binary) {
    acc += *m.accuracy;
    se += *m.sensitivity;
    sp += *m.specificity;
  }
  CHECK(std::abs(*report.mean_test_binary.accuracy - acc / 10.0) < 1e-12);
  CHECK(std::abs(*report.mean_test_binary.sensitivity - se / 10.0) < 1e-12);
  CHECK(std::abs(*report.mean_test_binary.specificity - sp / 10.0) < 1e-12);
  CHECK(*report.mean_test_binary.accuracy < 1.0);
  for (const auto& m : report.test_binary) {
    CHECK(*m.accuracy >= 0.0);
    CHECK(*m.accuracy <= 1.0);
  }

  const std::vector<Metric> values{0.5, std::nullopt, 1.0};
  CHECK(*mean_metric(values) == 0.75);
  const std::vector<Metric> none{std::nullopt};
  CHECK_FALSE(mean_metric(none).has_value());
}

TEST_CASE("run_cv: a test-fold outlier does not change any trained model") {
  svm::FeatureRows rows;
  std::vector<std::string> labels;
  blobs(15, 1.0, 4, rows, labels);
  const std::vector<svm::SvmConfig> grid{linear_cfg(0.1), linear_cfg(10.0)};

  struct Call {
    bool saw_sentinel;
    std::string model;
  };
  auto recording = [](std::vector<Call>& calls) -> Trainer {
    return [&calls](const svm::FeatureRows& r, std::span<const std::string> l, const svm::SvmConfig& c) -> Predictor {
      bool sentinel = false;
      for (const auto& row : r) sentinel = sentinel || row[0] > 1e5;
      auto model = std::make_shared<svm::SvmModel>(svm::train(r, l, c));
      calls.push_back({sentinel, svm::to_json(*model)});
      return [model](std::span<const double> x) { return svm::predict(*model, x).label; };
    };
  };

  std::vector<Call> clean, dirty;
  CvOptions opt;
  opt.trainer = recording(clean);
  run_cv(rows, labels, 5, grid, 17, opt);

  auto poisoned = rows;
  poisoned[6] = {1e6, -1e6};
  opt.trainer = recording(dirty);
  run_cv(poisoned, labels, 5, grid, 17, opt);

  REQUIRE(clean.size() == dirty.size());
  std::size_t untouched = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (dirty[i].saw_sentinel) continue;
    ++untouched;
    CHECK(dirty[i].model == clean[i].model);
  }
  // At least the outlier's own fold: 3 inner fits per grid point plus the
  // final fit. Inner fits elsewhere that hold the outlier out also count.
  CHECK(untouched >= 3 * grid.size() + 1);
  CHECK(untouched < clean.size());
}

TEST_CASE("run_cv: grid ties resolve to the smallest C") {
  svm::FeatureRows rows;
  std::vector<std::string> labels;
  blobs(12, 0.2, 5, rows, labels);
  const std::vector<svm::SvmConfig> grid{linear_cfg(10.0), linear_cfg(1.0), linear_cfg(100.0)};
  const auto report = run_cv(rows, labels, 4, grid, 3, {});
  for (const auto& f : report.folds) CHECK(f.selected_config == 1);
}

TEST_CASE("run_cv: argument errors") {
  svm::FeatureRows rows;
  std::vector<std::string> labels;
  blobs(5, 0.2, 5, rows, labels);
  const std::vector<svm::SvmConfig> grid{linear_cfg(1.0)};
  CHECK_ERROR_CODE(run_cv(rows, labels, 1, grid, 0, {}), ErrorCode::TooFewRows);
  CHECK_ERROR_CODE(run_cv(rows, labels, 2, {}, 0, {}), ErrorCode::InvalidConfig);
  const std::vector<std::string> one(rows.size(), "MI");
  CHECK_ERROR_CODE(run_cv(rows, one, 2, grid, 0, {}), ErrorCode::SingleClass);
  std::vector<std::string> short_labels(labels.begin(), labels.end() - 1);
  CHECK_ERROR_CODE(run_cv(rows, short_labels, 2, grid, 0, {}), ErrorCode::DimensionMismatch);
  CvOptions opt;
  opt.positive = "CH";
  CHECK_ERROR_CODE(run_cv(rows, labels, 2, grid, 0, opt), ErrorCode::InvalidArgument);
}

TEST_CASE("run_cv: multiclass folds and class order") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> noise(0.0, 0.2);
  svm::FeatureRows rows;
  std::vector<std::string> labels;
  const std::vector<std::string> names{"HC", "CH", "MI"};
  for (int i = 0; i < 15; ++i)
    for (std::size_t c = 0; c < names.size(); ++c) {
      rows.push_back({3.0 * static_cast<double>(c) + noise(rng), noise(rng)});
      labels.push_back(names[c]);
    }
  CvOptions opt;
  opt.task = Task::Multiclass;
  const std::vector<svm::SvmConfig> grid{linear_cfg(1.0)};
  const auto report = run_cv(rows, labels, 5, grid, 6, opt);
  CHECK(report.classes == std::vector<std::string>{"MI", "CH", "HC"});
  CHECK(*report.mean_test_multi.accuracy == 1.0);
  REQUIRE(report.mean_test_multi.sensitivity.size() == 3);
}

TEST_CASE("canonical class order") {
  CHECK(canonical_class_order({"HC", "MI", "HC"}) == std::vector<std::string>{"MI", "HC"});
  CHECK(canonical_class_order({"HC", "CH", "BBB", "DY", "VHD", "MI"}) ==
        std::vector<std::string>{"MI", "VHD", "DY", "BBB", "CH", "HC"});
  CHECK(canonical_class_order({"zeta", "HC", "alpha"}) == std::vector<std::string>{"HC", "alpha", "zeta"});
}

TEST_CASE("fold seeds are deterministic") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

TEST_CASE("report CSV layouts") {
  CvReport b;
  b.task = Task::Binary;
  b.classes = {"MI", "HC"};
  b.positive = "MI";
  b.mean_train_binary = {1.0, 0.5, 0.75};
  b.mean_test_binary = {std::nullopt, 0.8, 0.85};
  const std::vector<LeadSetResult> rows{{"12 leads combined", b}};
  CHECK(binary_report_csv(rows) ==
        "lead_set,train_sensitivity,train_specificity,train_accuracy,test_sensitivity,test_specificity,test_accuracy\n"
        "12 leads combined,1,0.5,0.75,n/a,0.8,0.85\n");
  const auto text = binary_report_text(rows);
  CHECK(text.find("positive class: MI") != std::string::npos);
  CHECK(text.find("n/a") != std::string::npos);

  CvReport m;
  m.task = Task::Multiclass;
  m.classes = {"MI", "VHD", "DY", "BBB", "CH", "HC"};
  m.mean_train_multi = {{1.0, 1.0, 1.0, 1.0, 1.0, 1.0}, 1.0};
  m.mean_test_multi = {{0.9, std::nullopt, 1.0, 1.0, 2.0 / 3.0, 1.0}, 0.9483};
  const std::vector<LeadSetResult> mrows{{"III", m}};
  CHECK(multiclass_report_csv(mrows, true) ==
        "lead_set,MI,VHD,DY,BBB,CH,HC,accuracy\n"
        "III,0.9,n/a,1,1,0.6666666667,1,0.9483\n");
  CHECK(multiclass_report_csv(mrows, false) ==
        "lead_set,MI,VHD,DY,BBB,CH,HC,accuracy\n"
        "III,1,1,1,1,1,1,1\n");
  CHECK_ERROR_CODE(binary_report_csv(mrows), ErrorCode::InvalidArgument);
}
