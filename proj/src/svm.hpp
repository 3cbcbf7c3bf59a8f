#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tvode::svm {

using FeatureRows = std::vector<std::vector<double>>;

enum class KernelType { Linear, Rbf };

struct KernelSpec {
  KernelType type = KernelType::Rbf;
  double gamma = 0.0;  // rbf only; 0 means 1 / number of features

  double operator()(std::span<const double> a, std::span<const double> b) const noexcept;
};

struct SvmConfig {
  KernelSpec kernel;
  double C = 10.0;
  std::map<std::string, double> class_weights;  // multipliers on C by class label
  bool balanced = false;                        // C_k = C n / (K n_k)
  double tol = 1e-3;
  int max_passes = 1000;  // SMO iteration cap is max_passes * n
  bool standardize = true;

  void validate() const;
};

struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 for constant columns

  static Standardization fit(const FeatureRows& rows);
  static Standardization identity(std::size_t n_features);
  std::vector<double> apply(std::span<const double> row) const;
};

// One two-class decision function sum_i coef_i K(sv_i, x) + bias, where
// coef_i = alpha_i y_i. Support rows live in standardized space.
struct BinaryMachine {
  std::size_t positive = 0;  // index into SvmModel::classes, wins when decision >= 0
  std::size_t negative = 1;
  FeatureRows support;
  std::vector<double> coef;
  std::vector<double> upper;  // C_i of each support vector
  double bias = 0.0;

  double decision(std::span<const double> standardized_row, const KernelSpec& kernel) const;
};

struct SvmModel {
  KernelSpec kernel;  // gamma resolved
  bool standardize = true;
  Standardization scaler;
  std::vector<std::string> classes;
  std::vector<BinaryMachine> machines;  // one per class pair, lexicographic pair order

  std::size_t n_features() const noexcept { return scaler.mean.size(); }
  bool is_binary() const noexcept { return classes.size() == 2; }
};

struct TrainDiagnostics {
  std::vector<double> objective;  // dual objective after every SMO step
  std::vector<double> alpha;      // per training row, caller order
  std::size_t iterations = 0;
  double final_gap = 0.0;  // max violating pair gap at exit
  bool converged = false;
};

// Labels must be +1 / -1. The model's classes are {"+1", "-1"}.
SvmModel train_binary(const FeatureRows& rows, std::span<const int> labels, const SvmConfig& cfg,
                      TrainDiagnostics* diagnostics = nullptr);

// One-vs-one over every pair of `class_list` (sorted distinct labels when
// empty). Standardization is shared and fitted on all rows.
SvmModel train_multiclass(const FeatureRows& rows, std::span<const std::string> labels, const SvmConfig& cfg,
                          std::span<const std::string> class_list = {});

// Two classes -> single machine with the lexicographically first class as
// positive; more -> one-vs-one.
SvmModel train(const FeatureRows& rows, std::span<const std::string> labels, const SvmConfig& cfg);

struct Prediction {
  std::string label;
  double decision = 0.0;  // binary decision value; summed winner margin for multiclass
};

Prediction predict(const SvmModel& model, std::span<const double> row);

std::string to_json(const SvmModel& model);
SvmModel from_json(std::string_view text);

}  // namespace tvode::svm
