#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "estimator.hpp"
#include "smoother.hpp"
#include "svm.hpp"

namespace tvode::pipeline {

// The twelve standard leads, in the conventional order.
const std::vector<std::string>& standard_leads();

// Expands a lead selection: "all" (every lead of the record, returned as
// an empty list), "all12", or a comma-separated list of names.
std::vector<std::string> expand_leads(std::string_view selection);

struct PipelineConfig {
  smoother::SmootherConfig smoother;
  estimator::EstimatorConfig estimator;

  svm::KernelType svm_kernel = svm::KernelType::Rbf;
  std::vector<double> svm_c{10.0};
  std::vector<double> svm_gamma{0.0};  // 0 = 1 / n_features
  double svm_tol = 1e-3;
  int svm_max_passes = 1000;
  bool svm_standardize = true;
  bool svm_balanced = false;

  std::size_t cv_k = 10;
  std::uint64_t cv_seed = 20140101;
  bool cv_group_by_subject = false;

  std::string leads = "all12";
  std::string lead_sets = "auto";
  std::string positive;  // binary positive class; derived when empty
  double csv_fs = 1000.0;
  std::size_t knot_stride = 10;
  std::size_t workers = 1;

  // Applies one "key=value" setting; unknown keys are InvalidConfig.
  void set(std::string_view key, std::string_view value);
  void validate() const;

  // Every key with its effective value, one "key=value" per line.
  std::string to_text() const;

  // SVM grid: the cross product of svm_c and svm_gamma.
  std::vector<svm::SvmConfig> svm_grid() const;
};

// Defaults overridden by the file's "key=value" lines ('#' comments).
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

// Worker count from TVODE_WORKERS, falling back to `fallback`.
std::size_t workers_from_env(std::size_t fallback);

}  // namespace tvode::pipeline
