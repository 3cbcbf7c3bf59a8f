#include "evaluation.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>

#include "error.hpp"

namespace tvode::eval {
namespace {

void shuffle(std::vector<std::size_t>& v, std::uint64_t seed) {
  std::uint64_t state = seed;
  for (std::size_t i = v.size(); i > 1; --i) {
    state = derive_seed(state, i);
    std::swap(v[i - 1], v[state % i]);
  }
}

std::vector<std::string> distinct(std::span<const std::string> labels) {
  std::vector<std::string> out(labels.begin(), labels.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Metric ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

// Select from the grid by inner k-fold accuracy on the training rows only.
std::size_t select_config(const svm::FeatureRows& rows, std::span<const std::string> labels,
                          std::span<const svm::SvmConfig> grid, std::size_t inner_folds, std::uint64_t seed,
                          const Trainer& trainer) {
  if (grid.size() == 1) return 0;
  std::map<std::string, std::size_t> counts;
  for (const auto& l : labels) ++counts[l];
  std::size_t smallest = rows.size();
  for (const auto& [_, c] : counts) smallest = std::min(smallest, c);
  const std::size_t inner_k = std::min(inner_folds, smallest);

  // Candidates visited by ascending (C, gamma) so the first maximum is the
  // most regularized one.
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (grid[a].C != grid[b].C) return grid[a].C < grid[b].C;
    return grid[a].kernel.gamma < grid[b].kernel.gamma;
  });

  std::vector<std::size_t> assignment;
  if (inner_k >= 2) assignment = stratified_kfold(labels, inner_k, seed);

  std::size_t best = order.front();
  double best_acc = -1.0;
  for (std::size_t g : order) {
    std::size_t hit = 0, seen = 0;
    if (inner_k >= 2) {
      for (std::size_t f = 0; f < inner_k; ++f) {
        svm::FeatureRows tr_rows, te_rows;
        std::vector<std::string> tr_labels, te_labels;
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (assignment[r] == f) {
            te_rows.push_back(rows[r]);
            te_labels.push_back(labels[r]);
          } else {
            tr_rows.push_back(rows[r]);
            tr_labels.push_back(labels[r]);
          }
        }
        try {
          const auto predictor = trainer(tr_rows, tr_labels, grid[g]);
          for (std::size_t r = 0; r < te_rows.size(); ++r) hit += predictor(te_rows[r]) == te_labels[r];
          seen += te_rows.size();
        } catch (const Error& e) {
          if (e.code() != ErrorCode::SingleClass && e.code() != ErrorCode::DegenerateFeatures &&
              e.code() != ErrorCode::EmptyPair)
            throw;
        }
      }
    } else {
      // Too few rows per class for an inner split: fall back to resubstitution.
      const auto predictor = trainer(rows, labels, grid[g]);
      for (std::size_t r = 0; r < rows.size(); ++r) hit += predictor(rows[r]) == labels[r];
      seen = rows.size();
    }
    const double acc = seen ? static_cast<double>(hit) / static_cast<double>(seen) : 0.0;
    if (acc > best_acc) {
      best_acc = acc;
      best = g;
    }
  }
  return best;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : classes_(std::move(classes)), counts_(classes_.size(), std::vector<std::size_t>(classes_.size(), 0)) {}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes, std::vector<std::vector<std::size_t>> counts)
    : classes_(std::move(classes)), counts_(std::move(counts)) {
  if (counts_.size() != classes_.size())
    fail(ErrorCode::DimensionMismatch, "confusion matrix must be square over its classes");
  for (const auto& row : counts_)
    if (row.size() != classes_.size())
      fail(ErrorCode::DimensionMismatch, "confusion matrix must be square over its classes");
}

void ConfusionMatrix::add(std::string_view truth, std::string_view predicted) {
  ++counts_[index_of(truth)][index_of(predicted)];
}

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t t = 0;
  for (const auto& row : counts_) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

std::size_t ConfusionMatrix::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < classes_.size(); ++i)
    if (classes_[i] == label) return i;
  fail(ErrorCode::InvalidArgument, "label '" + std::string(label) + "' is not in the confusion matrix");
}

BinaryMetrics metrics_binary(const ConfusionMatrix& cm, std::string_view positive) {
  if (cm.classes().size() != 2) fail(ErrorCode::InvalidArgument, "binary metrics need a 2x2 confusion matrix");
  const std::size_t p = cm.index_of(positive);
  const std::size_t n = 1 - p;
  const std::size_t tp = cm.count(p, p), fn = cm.count(p, n), tn = cm.count(n, n), fp = cm.count(n, p);
  return {ratio(tp, tp + fn), ratio(tn, tn + fp), ratio(tp + tn, cm.total())};
}

MulticlassMetrics metrics_multiclass(const ConfusionMatrix& cm) {
  const std::size_t K = cm.classes().size();
  if (K < 2) fail(ErrorCode::InvalidArgument, "multiclass metrics need at least 2 classes");
  MulticlassMetrics m;
  std::size_t trace = 0;
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t row = 0;
    for (std::size_t j = 0; j < K; ++j) row += cm.count(k, j);
    m.sensitivity.push_back(ratio(cm.count(k, k), row));
    trace += cm.count(k, k);
  }
  m.accuracy = ratio(trace, cm.total());
  return m;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> stratified_kfold(std::span<const std::string> labels, std::size_t k, std::uint64_t seed,
                                          std::span<const std::string> groups) {
  if (k < 2) fail(ErrorCode::TooFewRows, "k-fold cross-validation needs k >= 2");
  if (labels.size() < k) fail(ErrorCode::TooFewRows, std::to_string(labels.size()) + " rows cannot fill " +
                                                         std::to_string(k) + " folds");
  if (!groups.empty() && groups.size() != labels.size())
    fail(ErrorCode::DimensionMismatch, "one group id per row is required");

  // Units are rows, or groups of rows sharing a subject id. A group takes
  // the label of its first row.
  std::vector<std::vector<std::size_t>> units;
  std::vector<std::string> unit_label;
  if (groups.empty()) {
    for (std::size_t r = 0; r < labels.size(); ++r) {
      units.push_back({r});
      unit_label.push_back(labels[r]);
    }
  } else {
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      auto [it, fresh] = index.try_emplace(groups[r], units.size());
      if (fresh) {
        units.emplace_back();
        unit_label.push_back(labels[r]);
      }
      units[it->second].push_back(r);
    }
    if (units.size() < k)
      fail(ErrorCode::TooFewRows, std::to_string(units.size()) + " groups cannot fill " + std::to_string(k) + " folds");
  }

  std::vector<std::size_t> fold(labels.size(), 0);
  std::size_t cursor = 0;
  const auto classes = distinct(unit_label);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t u = 0; u < units.size(); ++u)
      if (unit_label[u] == classes[c]) members.push_back(u);
    shuffle(members, derive_seed(seed, c));
    for (std::size_t u : members) {
      for (std::size_t r : units[u]) fold[r] = cursor;
      cursor = (cursor + 1) % k;
    }
  }
  return fold;
}

Trainer svm_trainer() {
  return [](const svm::FeatureRows& rows, std::span<const std::string> labels, const svm::SvmConfig& cfg) -> Predictor {
    auto model = std::make_shared<svm::SvmModel>(svm::train(rows, labels, cfg));
    return [model](std::span<const double> row) { return svm::predict(*model, row).label; };
  };
}

Metric mean_metric(std::span<const Metric> values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values)
    if (v) {
      sum += *v;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::vector<std::string> canonical_class_order(std::vector<std::string> labels) {
  static const std::vector<std::string> preferred{"MI", "VHD", "DY", "BBB", "CH", "HC"};
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  std::vector<std::string> out;
  for (const auto& p : preferred)
    if (std::find(labels.begin(), labels.end(), p) != labels.end()) out.push_back(p);
  for (const auto& l : labels)
    if (std::find(preferred.begin(), preferred.end(), l) == preferred.end()) out.push_back(l);
  return out;
}

CvReport run_cv(const svm::FeatureRows& rows, std::span<const std::string> labels, std::size_t k,
                std::span<const svm::SvmConfig> grid, std::uint64_t seed, const CvOptions& options) {
  if (rows.size() != labels.size()) fail(ErrorCode::DimensionMismatch, "row and label counts differ");
  if (grid.empty()) fail(ErrorCode::InvalidConfig, "empty SVM configuration grid");
  const Trainer trainer = options.trainer ? options.trainer : svm_trainer();

  CvReport report;
  report.task = options.task;
  report.classes = options.classes.empty() ? canonical_class_order({labels.begin(), labels.end()}) : options.classes;
  if (report.classes.size() < 2) fail(ErrorCode::SingleClass, "cross-validation needs at least two classes");
  if (options.task == Task::Binary) {
    if (report.classes.size() != 2) fail(ErrorCode::InvalidArgument, "binary task needs exactly two classes");
    report.positive = options.positive.empty() ? report.classes.front() : options.positive;
    if (std::find(report.classes.begin(), report.classes.end(), report.positive) == report.classes.end())
      fail(ErrorCode::InvalidArgument, "positive class '" + report.positive + "' not present");
  }

  const auto assignment = stratified_kfold(labels, k, seed, options.groups);
  for (std::size_t f = 0; f < k; ++f) {
    svm::FeatureRows tr_rows, te_rows;
    std::vector<std::string> tr_labels, te_labels;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (assignment[r] == f) {
        te_rows.push_back(rows[r]);
        te_labels.push_back(labels[r]);
      } else {
        tr_rows.push_back(rows[r]);
        tr_labels.push_back(labels[r]);
      }
    }
    const std::uint64_t fold_seed = derive_seed(seed, 1000 + f);
    const std::size_t chosen = select_config(tr_rows, tr_labels, grid, options.inner_folds, fold_seed, trainer);
    const auto predictor = trainer(tr_rows, tr_labels, grid[chosen]);

    FoldResult fr{chosen, ConfusionMatrix(report.classes), ConfusionMatrix(report.classes)};
    for (std::size_t r = 0; r < tr_rows.size(); ++r) fr.train.add(tr_labels[r], predictor(tr_rows[r]));
    for (std::size_t r = 0; r < te_rows.size(); ++r) fr.test.add(te_labels[r], predictor(te_rows[r]));
    if (options.task == Task::Binary) {
      report.train_binary.push_back(metrics_binary(fr.train, report.positive));
      report.test_binary.push_back(metrics_binary(fr.test, report.positive));
    } else {
      report.train_multi.push_back(metrics_multiclass(fr.train));
      report.test_multi.push_back(metrics_multiclass(fr.test));
    }
    report.folds.push_back(std::move(fr));
  }

  auto mean_binary = [](const std::vector<BinaryMetrics>& folds) {
    std::vector<Metric> se, sp, acc;
    for (const auto& m : folds) {
      se.push_back(m.sensitivity);
      sp.push_back(m.specificity);
      acc.push_back(m.accuracy);
    }
    return BinaryMetrics{mean_metric(se), mean_metric(sp), mean_metric(acc)};
  };
  auto mean_multi = [&](const std::vector<MulticlassMetrics>& folds) {
    MulticlassMetrics out;
    for (std::size_t c = 0; c < report.classes.size(); ++c) {
      std::vector<Metric> v;
      for (const auto& m : folds) v.push_back(m.sensitivity[c]);
      out.sensitivity.push_back(mean_metric(v));
    }
    std::vector<Metric> acc;
    for (const auto& m : folds) acc.push_back(m.accuracy);
    out.accuracy = mean_metric(acc);
    return out;
  };
  if (options.task == Task::Binary) {
    report.mean_train_binary = mean_binary(report.train_binary);
    report.mean_test_binary = mean_binary(report.test_binary);
  } else {
    report.mean_train_multi = mean_multi(report.train_multi);
    report.mean_test_multi = mean_multi(report.test_multi);
  }
  return report;
}

}  // namespace tvode::eval
