#include <cmath>

#include "error.hpp"
#include "smoother.hpp"

namespace tvode::smoother {

SmoothedState cubic_spline_fit(const ingest::LeadSignal& lead, double fs, std::size_t knot_stride) {
  if (knot_stride < 1) fail(ErrorCode::InvalidArgument, "knot_stride must be >= 1");
  if (!(fs > 0.0)) fail(ErrorCode::InvalidArgument, "fs must be positive");
  const auto& y = lead.samples;
  const std::size_t n_knots = y.empty() ? 0 : (y.size() - 1) / knot_stride + 1;
  if (n_knots < 4)
    fail(ErrorCode::TooFewKnots, "natural cubic spline needs >= 4 knots, lead '" + lead.name + "' gives " +
                                     std::to_string(n_knots));

  const double h = static_cast<double>(knot_stride) / fs;
  std::vector<double> knot_y(n_knots);
  for (std::size_t k = 0; k < n_knots; ++k) knot_y[k] = y[k * knot_stride];

  // Second derivatives M_k with M_0 = M_{n-1} = 0; uniform spacing gives
  // M_{k-1} + 4 M_k + M_{k+1} = 6 (y_{k-1} - 2 y_k + y_{k+1}) / h^2.
  // Thomas algorithm on the interior unknowns.
  std::vector<double> m(n_knots, 0.0);
  const std::size_t n_inner = n_knots - 2;
  std::vector<double> c_prime(n_inner), d_prime(n_inner);
  for (std::size_t i = 0; i < n_inner; ++i) {
    const std::size_t k = i + 1;
    const double rhs = 6.0 * (knot_y[k - 1] - 2.0 * knot_y[k] + knot_y[k + 1]) / (h * h);
    const double denom = 4.0 - (i ? c_prime[i - 1] : 0.0);
    c_prime[i] = 1.0 / denom;
    d_prime[i] = (rhs - (i ? d_prime[i - 1] : 0.0)) / denom;
  }
  for (std::size_t i = n_inner; i-- > 0;) m[i + 1] = d_prime[i] - (i + 1 < n_inner ? c_prime[i] * m[i + 2] : 0.0);

  const std::size_t last_sample = (n_knots - 1) * knot_stride;
  SmoothedState out;
  out.grid.reserve(last_sample + 1);
  out.x.reserve(last_sample + 1);
  out.dx.reserve(last_sample + 1);
  out.d2x.reserve(last_sample + 1);
  double sse = 0.0;
  for (std::size_t s = 0; s <= last_sample; ++s) {
    const std::size_t k = std::min(s / knot_stride, n_knots - 2);
    const double a = static_cast<double>(s - k * knot_stride) / fs;  // t - t_k
    const double b = h - a;                                          // t_{k+1} - t
    const double mk = m[k], mk1 = m[k + 1], yk = knot_y[k], yk1 = knot_y[k + 1];
    const double x = mk * b * b * b / (6.0 * h) + mk1 * a * a * a / (6.0 * h) + (yk - mk * h * h / 6.0) * b / h +
                     (yk1 - mk1 * h * h / 6.0) * a / h;
    const double dx = -mk * b * b / (2.0 * h) + mk1 * a * a / (2.0 * h) + (yk1 - yk) / h - (mk1 - mk) * h / 6.0;
    const double d2x = (mk * b + mk1 * a) / h;
    out.grid.push_back(static_cast<double>(s) / fs);
    out.x.push_back(s % knot_stride == 0 ? y[s] : x);
    out.dx.push_back(dx);
    out.d2x.push_back(d2x);
    const double r = y[s] - out.x.back();
    sse += r * r;
  }
  out.residual_variance = sse / static_cast<double>(out.grid.size());
  return out;
}

}  // namespace tvode::smoother
