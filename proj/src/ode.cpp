#include "ode.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "csv.hpp"
#include "error.hpp"

namespace tvode::ode {

CoefficientTrack::CoefficientTrack(std::vector<double> grid, std::vector<double> b0, std::vector<double> b1)
    : grid_(std::move(grid)), b0_(std::move(b0)), b1_(std::move(b1)) {
  if (grid_.empty()) fail(ErrorCode::InvalidArgument, "coefficient track is empty");
  if (b0_.size() != grid_.size() || b1_.size() != grid_.size())
    fail(ErrorCode::InvalidArgument, "coefficient track arrays differ in length");
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (!std::isfinite(grid_[i]) || !std::isfinite(b0_[i]) || !std::isfinite(b1_[i]))
      fail(ErrorCode::NonFinite, "coefficient track has non-finite entries");
    if (i && !(grid_[i] > grid_[i - 1]))
      fail(ErrorCode::InvalidArgument, "coefficient track grid must be strictly increasing");
  }
}

CoefficientTrack::Value CoefficientTrack::at(double t, std::size_t& hint) const noexcept {
  const std::size_t n = grid_.size();
  if (n == 1 || t <= grid_.front()) return {b0_.front(), b1_.front()};
  if (t >= grid_.back()) return {b0_.back(), b1_.back()};
  if (hint + 1 >= n || grid_[hint] > t) hint = 0;
  if (grid_[hint + 1] < t) {
    // Short forward scan covers monotone sweeps; fall back to bisection.
    std::size_t steps = 0;
    while (hint + 1 < n - 1 && grid_[hint + 1] < t && steps < 8) {
      ++hint;
      ++steps;
    }
    if (grid_[hint + 1] < t) {
      const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
      hint = static_cast<std::size_t>(it - grid_.begin()) - 1;
    }
  }
  const double w = (t - grid_[hint]) / (grid_[hint + 1] - grid_[hint]);
  return {b0_[hint] + w * (b0_[hint + 1] - b0_[hint]), b1_[hint] + w * (b1_[hint + 1] - b1_[hint])};
}

CoefficientTrack linear_track(double t_begin, double t_end, std::size_t points, double b0_intercept,
                              double b0_slope, double b1_intercept, double b1_slope) {
  if (points < 2 || !(t_end > t_begin)) fail(ErrorCode::InvalidArgument, "linear track needs >= 2 points on a non-empty interval");
  std::vector<double> grid(points), b0(points), b1(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = i + 1 == points
                         ? t_end
                         : t_begin + (t_end - t_begin) * static_cast<double>(i) / static_cast<double>(points - 1);
    grid[i] = t;
    b0[i] = b0_intercept + b0_slope * t;
    b1[i] = b1_intercept + b1_slope * t;
  }
  return CoefficientTrack(std::move(grid), std::move(b0), std::move(b1));
}

std::string track_to_csv(const CoefficientTrack& track) {
  std::string out = "t,b0,b1\n";
  for (std::size_t i = 0; i < track.size(); ++i)
    out += csv::format_exact(track.grid()[i]) + ',' + csv::format_exact(track.b0()[i]) + ',' +
           csv::format_exact(track.b1()[i]) + '\n';
  return out;
}

CoefficientTrack track_from_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty() || rows.front() != csv::Row{"t", "b0", "b1"})
    fail(ErrorCode::InvalidArgument, "track CSV must start with header t,b0,b1");
  std::vector<double> t, b0, b1;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 3) fail(ErrorCode::RaggedRows, "track CSV row " + std::to_string(r + 1) + " needs 3 cells");
    double v[3];
    for (int c = 0; c < 3; ++c)
      if (!csv::parse_double(rows[r][c], v[c]))
        fail(ErrorCode::NonNumericCell, "track CSV cell '" + rows[r][c] + "' is not numeric");
    t.push_back(v[0]);
    b0.push_back(v[1]);
    b1.push_back(v[2]);
  }
  return CoefficientTrack(std::move(t), std::move(b0), std::move(b1));
}

std::size_t sample_count(double fs, double duration) noexcept {
  return static_cast<std::size_t>(std::floor(duration * fs + 1e-9)) + 1;
}

Trajectory solve_ode(const CoefficientTrack& track, const OdeInitialState& init, double fs, double duration) {
  if (!(fs > 0.0) || !(duration > 0.0) || !std::isfinite(fs) || !std::isfinite(duration))
    fail(ErrorCode::InvalidArgument, "solve_ode needs fs > 0 and duration > 0");
  if (!std::isfinite(init.t0) || !std::isfinite(init.x0) || !std::isfinite(init.v0))
    fail(ErrorCode::NonFinite, "initial state must be finite");
  const double t_end = init.t0 + duration;
  const double slack = 1e-9 * std::max({1.0, std::abs(init.t0), std::abs(t_end)});
  if (track.grid().front() > init.t0 + slack || track.grid().back() < t_end - slack)
    fail(ErrorCode::GridCoverage, "coefficient track does not cover [" + csv::format10(init.t0) + ", " +
                                      csv::format10(t_end) + "]");

  const std::size_t n = sample_count(fs, duration);
  const double h = 1.0 / fs;
  Trajectory out;
  out.t.resize(n);
  out.x.resize(n);
  out.dx.resize(n);
  double x = init.x0, v = init.v0;
  std::size_t hint = 0;
  auto accel = [&](double t, double xs, double vs) {
    const auto c = track.at(t, hint);
    return -c.b1 * vs - c.b0 * xs;
  };
  for (std::size_t k = 0; k < n; ++k) {
    const double t = init.t0 + static_cast<double>(k) * h;
    out.t[k] = t;
    out.x[k] = x;
    out.dx[k] = v;
    if (!std::isfinite(x) || !std::isfinite(v))
      fail(ErrorCode::NonFinite, "ODE solution blew up at t=" + csv::format10(t));
    if (k + 1 == n) break;
    const double k1x = v;
    const double k1v = accel(t, x, v);
    const double k2x = v + 0.5 * h * k1v;
    const double k2v = accel(t + 0.5 * h, x + 0.5 * h * k1x, k2x);
    const double k3x = v + 0.5 * h * k2v;
    const double k3v = accel(t + 0.5 * h, x + 0.5 * h * k2x, k3x);
    const double k4x = v + h * k3v;
    const double k4v = accel(t + h, x + h * k3x, k4x);
    x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
  return out;
}

ingest::SignalRecord synth_record(std::span<const CoefficientTrack> tracks, std::span<const OdeInitialState> inits,
                                  std::span<const std::string> lead_names, double fs, double duration,
                                  double noise_sd, std::uint64_t seed, std::string record_id, std::string label) {
  if (tracks.size() != inits.size() || tracks.size() != lead_names.size() || tracks.empty())
    fail(ErrorCode::InvalidArgument, "synth_record needs one track, initial state and name per lead");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
    fail(ErrorCode::InvalidArgument, "noise_sd must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sd > 0.0 ? noise_sd : 1.0);
  std::vector<ingest::LeadSignal> leads;
  leads.reserve(tracks.size());
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    auto traj = solve_ode(tracks[k], inits[k], fs, duration);
    if (noise_sd > 0.0)
      for (auto& v : traj.x) v += noise(rng);
    const double gain = synth_gain(traj.x);
    leads.push_back({lead_names[k], std::move(traj.x), gain, 0});
  }
  return ingest::SignalRecord(std::move(record_id), std::move(label), fs, std::move(leads));
}

double synth_gain(std::span<const double> samples) noexcept {
  double peak = 0.0;
  for (double v : samples) peak = std::max(peak, std::abs(v));
  if (!(peak > 0.0)) return kSynthMaxGain;
  return std::clamp(std::floor(kSynthFullScale / peak), 1.0, kSynthMaxGain);
}

}  // namespace tvode::ode
