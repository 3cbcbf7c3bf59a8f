#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ingest.hpp"

namespace tvode::ode {

// b0(t), b1(t) of x'' + b1(t) x' + b0(t) x = 0 sampled on a strictly
// increasing grid. Values between grid points are linear interpolants.
class CoefficientTrack {
 public:
  CoefficientTrack(std::vector<double> grid, std::vector<double> b0, std::vector<double> b1);

  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& b0() const noexcept { return b0_; }
  const std::vector<double>& b1() const noexcept { return b1_; }
  std::size_t size() const noexcept { return grid_.size(); }

  struct Value {
    double b0;
    double b1;
  };
  // t must lie within the grid (clamped at the ends). `hint` is a segment
  // index cache for monotone sweeps.
  Value at(double t, std::size_t& hint) const noexcept;
  Value at(double t) const noexcept {
    std::size_t hint = 0;
    return at(t, hint);
  }

 private:
  std::vector<double> grid_, b0_, b1_;
};

// b0(t) = b0_intercept + b0_slope t, likewise b1, on `points` equally
// spaced times covering [t_begin, t_end].
CoefficientTrack linear_track(double t_begin, double t_end, std::size_t points, double b0_intercept,
                              double b0_slope, double b1_intercept, double b1_slope);

std::string track_to_csv(const CoefficientTrack& track);
CoefficientTrack track_from_csv(std::string_view text);

struct OdeInitialState {
  double t0 = 0.0;
  double x0 = 0.0;  // mV
  double v0 = 0.0;  // mV/s
};

struct Trajectory {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> dx;
};

// Number of uniform samples t0 + k/fs covering [t0, t0 + duration].
std::size_t sample_count(double fs, double duration) noexcept;

// Classical fixed-step RK4 with step 1/fs.
Trajectory solve_ode(const CoefficientTrack& track, const OdeInitialState& init, double fs, double duration);

// One lead per track: clean solution plus i.i.d. N(0, noise_sd^2), seeded.
ingest::SignalRecord synth_record(std::span<const CoefficientTrack> tracks,
                                  std::span<const OdeInitialState> inits,
                                  std::span<const std::string> lead_names, double fs, double duration,
                                  double noise_sd, std::uint64_t seed, std::string record_id = "synth",
                                  std::string label = {});

// Synthesized leads get the largest integer gain (ADU/mV) that keeps the
// lead's peak within +-kSynthFullScale ADU, capped at kSynthMaxGain.
inline constexpr double kSynthFullScale = 32000.0;
inline constexpr double kSynthMaxGain = 1.0e6;
double synth_gain(std::span<const double> samples) noexcept;

}  // namespace tvode::ode
