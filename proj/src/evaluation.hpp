#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "svm.hpp"

namespace tvode::eval {

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> classes);
  ConfusionMatrix(std::vector<std::string> classes, std::vector<std::vector<std::size_t>> counts);

  void add(std::string_view truth, std::string_view predicted);

  const std::vector<std::string>& classes() const noexcept { return classes_; }
  std::size_t count(std::size_t truth, std::size_t predicted) const { return counts_.at(truth).at(predicted); }
  std::size_t total() const noexcept;
  std::size_t index_of(std::string_view label) const;

 private:
  std::vector<std::string> classes_;
  std::vector<std::vector<std::size_t>> counts_;  // [true][predicted]
};

// Undefined (empty denominator) metrics are nullopt.
using Metric = std::optional<double>;

struct BinaryMetrics {
  Metric sensitivity;
  Metric specificity;
  Metric accuracy;
};

struct MulticlassMetrics {
  std::vector<Metric> sensitivity;  // per class, in ConfusionMatrix order
  Metric accuracy;
};

BinaryMetrics metrics_binary(const ConfusionMatrix& cm, std::string_view positive);
MulticlassMetrics metrics_multiclass(const ConfusionMatrix& cm);

// SplitMix64 step; used to derive independent per-fold / per-record seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// Fold index per row. Rows of each class are shuffled then dealt round-robin
// with the dealing position carried across classes, so fold sizes and
// per-class fold counts differ by at most one. With `groups`, whole groups
// are dealt instead of rows.
std::vector<std::size_t> stratified_kfold(std::span<const std::string> labels, std::size_t k, std::uint64_t seed,
                                          std::span<const std::string> groups = {});

enum class Task { Binary, Multiclass };

using Predictor = std::function<std::string(std::span<const double>)>;
using Trainer =
    std::function<Predictor(const svm::FeatureRows&, std::span<const std::string>, const svm::SvmConfig&)>;

// SVM train + predict.
Trainer svm_trainer();

struct FoldResult {
  std::size_t selected_config = 0;
  ConfusionMatrix train;
  ConfusionMatrix test;
};

struct CvOptions {
  Task task = Task::Binary;
  std::string positive;              // binary only
  std::vector<std::string> classes;  // report/class order; derived when empty
  std::vector<std::string> groups;   // optional subject ids, one per row
  std::size_t inner_folds = 3;
  Trainer trainer;  // svm_trainer() when empty
};

struct CvReport {
  Task task = Task::Binary;
  std::vector<std::string> classes;
  std::string positive;
  std::vector<FoldResult> folds;
  std::vector<BinaryMetrics> train_binary, test_binary;  // per fold
  std::vector<MulticlassMetrics> train_multi, test_multi;
  BinaryMetrics mean_train_binary, mean_test_binary;
  MulticlassMetrics mean_train_multi, mean_test_multi;
};

// Mean over folds where the metric is defined; nullopt if none is.
Metric mean_metric(std::span<const Metric> values);

CvReport run_cv(const svm::FeatureRows& rows, std::span<const std::string> labels, std::size_t k,
                std::span<const svm::SvmConfig> grid, std::uint64_t seed, const CvOptions& options);

// Preferred column order for the known diagnostic classes, others sorted after.
std::vector<std::string> canonical_class_order(std::vector<std::string> labels);

}  // namespace tvode::eval
