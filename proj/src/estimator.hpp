#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ingest.hpp"
#include "ode.hpp"
#include "smoother.hpp"

namespace tvode::estimator {

struct EstimatorConfig {
  double window = 0.05;    // half-width w in seconds
  double ridge = 1e-8;
  double edge_trim = 0.05;  // fraction of the grid dropped at each end before taking maxima
  bool abs_max = false;     // use max |b| instead of the signed maximum

  void validate() const;
};

// Local-linear least squares for (b1, b1', b0, b0') at every grid time of
// the smoothed state: rows [x' z, x z] with z = [1, t - t0], response -x''.
ode::CoefficientTrack fit_coefficients(const smoother::SmoothedState& state, const EstimatorConfig& cfg);

struct LeadFeatures {
  std::string lead;
  double max_b0 = 0.0;
  double argmax_b0_t = 0.0;
  double max_b1 = 0.0;
  double argmax_b1_t = 0.0;
};

struct FeatureVector {
  std::string record_id;
  std::string label;
  std::vector<LeadFeatures> leads;

  // (max_b0, max_b1) per lead, in lead order.
  std::vector<double> values() const;
  const LeadFeatures* find(std::string_view lead) const noexcept;
};

LeadFeatures extract_features(const ode::CoefficientTrack& track, const EstimatorConfig& cfg,
                              std::string lead = {});

// Empty `leads` selects every lead of the record.
FeatureVector featurize_record(const ingest::SignalRecord& record, std::span<const std::string> leads,
                               const smoother::SmootherConfig& smoother_cfg, const EstimatorConfig& estimator_cfg);

std::string features_to_csv(std::span<const FeatureVector> features);
std::vector<FeatureVector> features_from_csv(std::string_view text);

}  // namespace tvode::estimator
