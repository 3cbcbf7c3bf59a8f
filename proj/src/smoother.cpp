#include "smoother.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <numbers>

#include "csv.hpp"
#include "error.hpp"

namespace tvode::smoother {
namespace {

// Columns whose pivoted R diagonal falls below these fractions of the
// largest one are treated as rank deficient / ill conditioned.
constexpr double kRankTolerance = 1e-12;
constexpr double kRidgeTolerance = 1e-8;

// Linear map from the samples of one window to [x, x', ..., x^(p)] at t0.
struct WindowOperator {
  long first = 0;  // first sample index of the window
  Eigen::MatrixXd map;  // (p+1) x window
};

// t0 is expressed in sample units (t0 * fs) so interior windows on the
// sample grid produce bit-identical operators.
WindowOperator build_operator(double tau0, std::size_t n_samples, double fs, const SmootherConfig& cfg) {
  const int p = cfg.poly_order;
  const double h = cfg.bandwidth;
  const double radius = kernel_support(cfg.kernel) * h * fs;
  const long lo = std::max(0L, static_cast<long>(std::ceil(tau0 - radius)));
  const long hi = std::min(static_cast<long>(n_samples) - 1, static_cast<long>(std::floor(tau0 + radius)));

  std::vector<long> idx;
  std::vector<double> sqrt_w, u;
  for (long j = lo; j <= hi; ++j) {
    const double offset = (static_cast<double>(j) - tau0) / fs;
    const double w = kernel_weight(cfg.kernel, offset, h);
    if (w > 0.0) {
      idx.push_back(j);
      sqrt_w.push_back(std::sqrt(w));
      u.push_back(offset / h);
    }
  }
  const auto m = static_cast<Eigen::Index>(idx.size());
  if (m < p + 1)
    fail(ErrorCode::InsufficientSupport, "only " + std::to_string(m) + " weighted samples at t0=" +
                                             csv::format10(tau0 / fs) + ", need " + std::to_string(p + 1));

  // Weighted design on the scaled offset u = (t - t0)/h, columns equilibrated.
  Eigen::MatrixXd design(m, p + 1);
  for (Eigen::Index r = 0; r < m; ++r) {
    double pw = 1.0;
    for (int c = 0; c <= p; ++c) {
      design(r, c) = sqrt_w[r] * pw;
      pw *= u[r];
    }
  }
  Eigen::VectorXd col_norm = design.colwise().norm().transpose();
  for (int c = 0; c <= p; ++c) {
    if (!(col_norm(c) > 0.0)) fail(ErrorCode::SingularDesign, "degenerate local design column");
    design.col(c) /= col_norm(c);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  const double r_max = std::abs(qr.matrixR()(0, 0));
  const double r_min = std::abs(qr.matrixR()(p, p));
  const double rcond = r_max > 0.0 ? r_min / r_max : 0.0;
  if (rcond < kRankTolerance)
    fail(ErrorCode::SingularDesign, "local polynomial design is rank deficient at t0=" + csv::format10(tau0 / fs));

  // pinv = P R^-1 Q1^T for A P = Q R, formed from the thin factor only.
  Eigen::MatrixXd pinv;  // (p+1) x m, maps sqrt(w) * y to equilibrated coefficients
  if (rcond < kRidgeTolerance && cfg.ridge > 0.0) {
    Eigen::MatrixXd aug(m + p + 1, p + 1);
    aug.topRows(m) = design;
    aug.bottomRows(p + 1) = std::sqrt(cfg.ridge) * Eigen::MatrixXd::Identity(p + 1, p + 1);
    Eigen::HouseholderQR<Eigen::MatrixXd> rqr(aug);
    const Eigen::MatrixXd q1 = rqr.householderQ() * Eigen::MatrixXd::Identity(m + p + 1, p + 1);
    const Eigen::MatrixXd r1 = rqr.matrixQR().topRows(p + 1).triangularView<Eigen::Upper>();
    pinv = r1.triangularView<Eigen::Upper>().solve(q1.topRows(m).transpose());
  } else if (rcond < kRidgeTolerance) {
    fail(ErrorCode::SingularDesign, "ill-conditioned local design and ridge disabled");
  } else {
    const Eigen::MatrixXd q1 = qr.householderQ() * Eigen::MatrixXd::Identity(m, p + 1);
    const Eigen::MatrixXd r1 = qr.matrixR().topRows(p + 1).triangularView<Eigen::Upper>();
    pinv = qr.colsPermutation() * r1.triangularView<Eigen::Upper>().solve(q1.transpose());
  }

  // Taylor parameterization: x^(k)(t0) = k! * coefficient_k / h^k.
  WindowOperator op;
  op.first = idx.front();
  const long span = idx.back() - idx.front() + 1;
  op.map = Eigen::MatrixXd::Zero(p + 1, span);
  double fact = 1.0, hk = 1.0;
  for (int k = 0; k <= p; ++k) {
    if (k > 0) {
      fact *= k;
      hk *= h;
    }
    const double scale = fact / (hk * col_norm(k));
    for (Eigen::Index r = 0; r < m; ++r) op.map(k, idx[r] - op.first) = scale * pinv(k, r) * sqrt_w[r];
  }
  return op;
}

// The operator reproduces constants, so it is applied to samples offset by
// the window's first value; constant data then gives exact derivatives.
std::vector<double> apply(const Eigen::MatrixXd& map, long first, std::span<const double> samples) {
  const auto rows = map.rows();
  const double ref = samples[static_cast<std::size_t>(first)];
  std::vector<double> out(static_cast<std::size_t>(rows), 0.0);
  for (Eigen::Index c = 0; c < map.cols(); ++c) {
    const double y = samples[static_cast<std::size_t>(first + c)] - ref;
    for (Eigen::Index k = 0; k < rows; ++k) out[static_cast<std::size_t>(k)] += map(k, c) * y;
  }
  out[0] += ref;
  return out;
}

double snap_to_sample(double t0, double fs) {
  const double tau = t0 * fs;
  const double nearest = std::round(tau);
  return std::abs(tau - nearest) <= 1e-9 * std::max(1.0, std::abs(tau)) ? nearest : tau;
}

}  // namespace

Kernel parse_kernel(const std::string& name) {
  if (name == "epanechnikov") return Kernel::Epanechnikov;
  if (name == "gaussian") return Kernel::Gaussian;
  fail(ErrorCode::InvalidConfig, "unknown kernel '" + name + "'");
}

const char* to_string(Kernel kernel) noexcept {
  return kernel == Kernel::Epanechnikov ? "epanechnikov" : "gaussian";
}

double kernel_value(Kernel kernel, double u) noexcept {
  switch (kernel) {
    case Kernel::Epanechnikov:
      return std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case Kernel::Gaussian:
      return std::abs(u) <= kernel_support(kernel) ? std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi)
                                                   : 0.0;
  }
  return 0.0;
}

double kernel_support(Kernel kernel) noexcept { return kernel == Kernel::Epanechnikov ? 1.0 : 5.0; }

void SmootherConfig::validate() const {
  if (poly_order < 2) fail(ErrorCode::InvalidConfig, "smoother poly_order must be >= 2");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) fail(ErrorCode::InvalidConfig, "smoother bandwidth must be > 0");
  if (eval_stride < 1) fail(ErrorCode::InvalidConfig, "smoother eval_stride must be >= 1");
  if (!(ridge >= 0.0)) fail(ErrorCode::InvalidConfig, "smoother ridge must be >= 0");
}

std::vector<double> local_poly_fit(std::span<const double> samples, double fs, double t0, const SmootherConfig& cfg) {
  cfg.validate();
  if (!(fs > 0.0)) fail(ErrorCode::InvalidArgument, "fs must be positive");
  const auto op = build_operator(snap_to_sample(t0, fs), samples.size(), fs, cfg);
  return apply(op.map, op.first, samples);
}

SmoothedState smooth_lead(const ingest::LeadSignal& lead, double fs, const SmootherConfig& cfg) {
  cfg.validate();
  const auto& y = lead.samples;
  if (y.size() < static_cast<std::size_t>(cfg.poly_order) + 1)
    fail(ErrorCode::InsufficientSupport, "lead '" + lead.name + "' is shorter than poly_order + 1");

  // Windows are keyed by their extent relative to t0; every interior point
  // shares a single operator.
  std::map<std::pair<long, long>, WindowOperator> cache;
  const long radius = static_cast<long>(std::floor(kernel_support(cfg.kernel) * cfg.bandwidth * fs)) + 1;
  const long last = static_cast<long>(y.size()) - 1;

  SmoothedState out;
  const std::size_t n_eval = (y.size() - 1) / cfg.eval_stride + 1;
  out.grid.reserve(n_eval);
  out.x.reserve(n_eval);
  out.dx.reserve(n_eval);
  out.d2x.reserve(n_eval);
  double sse = 0.0;
  for (std::size_t i = 0; i < y.size(); i += cfg.eval_stride) {
    const long li = static_cast<long>(i);
    const std::pair<long, long> key{std::max(-radius, -li), std::min(radius, last - li)};
    auto it = cache.find(key);
    if (it == cache.end()) {
      WindowOperator op = build_operator(static_cast<double>(i), y.size(), fs, cfg);
      op.first -= li;  // store relative to t0
      it = cache.emplace(key, std::move(op)).first;
    }
    const auto deriv = apply(it->second.map, it->second.first + li, y);
    out.grid.push_back(static_cast<double>(i) / fs);
    out.x.push_back(deriv[0]);
    out.dx.push_back(deriv[1]);
    out.d2x.push_back(deriv[2]);
    const double r = y[i] - deriv[0];
    sse += r * r;
  }
  out.residual_variance = sse / static_cast<double>(out.grid.size());
  return out;
}

std::string state_to_csv(const SmoothedState& state) {
  std::string out = "t,x,dx,d2x\n";
  for (std::size_t i = 0; i < state.grid.size(); ++i)
    out += csv::format10(state.grid[i]) + ',' + csv::format10(state.x[i]) + ',' + csv::format10(state.dx[i]) +
           ',' + csv::format10(state.d2x[i]) + '\n';
  return out;
}

}  // namespace tvode::smoother
