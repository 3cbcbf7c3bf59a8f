#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ingest.hpp"

namespace tvode::smoother {

enum class Kernel { Epanechnikov, Gaussian };

Kernel parse_kernel(const std::string& name);
const char* to_string(Kernel kernel) noexcept;

// K(u). Epanechnikov is 0.75 (1 - u^2) on |u| <= 1, Gaussian the standard
// normal density.
double kernel_value(Kernel kernel, double u) noexcept;

// Half-width of the window that enters a solve, in bandwidth units. The
// Gaussian is truncated at 5h (relative weight < 4e-6).
double kernel_support(Kernel kernel) noexcept;

// w_h(t_j) = K((t_j - t0) / h) / h
inline double kernel_weight(Kernel kernel, double offset, double h) noexcept {
  return kernel_value(kernel, offset / h) / h;
}

struct SmootherConfig {
  int poly_order = 3;
  double bandwidth = 0.025;  // seconds
  Kernel kernel = Kernel::Epanechnikov;
  std::size_t eval_stride = 10;
  double ridge = 1e-8;

  void validate() const;
};

struct SmoothedState {
  std::vector<double> grid;
  std::vector<double> x;
  std::vector<double> dx;
  std::vector<double> d2x;
  double residual_variance = 0.0;
};

// Returns [x, x', x'', ..., x^(p)] at t0 from uniformly sampled data
// starting at t = 0.
std::vector<double> local_poly_fit(std::span<const double> samples, double fs, double t0,
                                   const SmootherConfig& cfg);

SmoothedState smooth_lead(const ingest::LeadSignal& lead, double fs, const SmootherConfig& cfg);

// Natural cubic spline through every knot_stride-th sample, evaluated at
// every sample between the first and last knot.
SmoothedState cubic_spline_fit(const ingest::LeadSignal& lead, double fs, std::size_t knot_stride);

std::string state_to_csv(const SmoothedState& state);

}  // namespace tvode::smoother
