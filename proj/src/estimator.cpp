#include "estimator.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "csv.hpp"
#include "error.hpp"

namespace tvode::estimator {
namespace {

constexpr double kRankTolerance = 1e-12;
constexpr double kRidgeTolerance = 1e-8;

}  // namespace

void EstimatorConfig::validate() const {
  if (!(window > 0.0) || !std::isfinite(window)) fail(ErrorCode::InvalidConfig, "estimator window must be > 0");
  if (!(ridge >= 0.0)) fail(ErrorCode::InvalidConfig, "estimator ridge must be >= 0");
  if (!(edge_trim >= 0.0 && edge_trim < 0.5)) fail(ErrorCode::InvalidConfig, "estimator edge_trim must be in [0, 0.5)");
}

ode::CoefficientTrack fit_coefficients(const smoother::SmoothedState& state, const EstimatorConfig& cfg) {
  cfg.validate();
  const std::size_t n = state.grid.size();
  if (state.x.size() != n || state.dx.size() != n || state.d2x.size() != n)
    fail(ErrorCode::InvalidArgument, "smoothed state arrays differ in length");
  const double w = cfg.window;
  const double reach = w * (1.0 + 1e-9);

  std::vector<double> b0(n), b1(n);
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  std::size_t lo = 0, hi = 0;  // window [lo, hi)
  for (std::size_t i = 0; i < n; ++i) {
    const double t0 = state.grid[i];
    while (lo < n && state.grid[lo] < t0 - reach) ++lo;
    if (hi < lo) hi = lo;
    while (hi < n && state.grid[hi] <= t0 + reach) ++hi;
    const auto m = static_cast<Eigen::Index>(hi - lo);
    if (m < 4)
      fail(ErrorCode::InsufficientWindow, "only " + std::to_string(m) + " state points within " + csv::format10(w) +
                                              " s of t0=" + csv::format10(t0) + ", need 4");

    design.resize(m, 4);
    response.resize(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const std::size_t j = lo + static_cast<std::size_t>(r);
      const double z = (state.grid[j] - t0) / w;
      design(r, 0) = state.dx[j];
      design(r, 1) = state.dx[j] * z;
      design(r, 2) = state.x[j];
      design(r, 3) = state.x[j] * z;
      response(r) = -state.d2x[j];
    }
    Eigen::Vector4d col_norm = design.colwise().norm().transpose();
    if (!(col_norm.minCoeff() > 0.0) || !col_norm.allFinite())
      fail(ErrorCode::SingularDesign, "state vanishes on the window at t0=" + csv::format10(t0));
    for (int c = 0; c < 4; ++c) design.col(c) /= col_norm(c);

    qr.compute(design);
    const double r_max = std::abs(qr.matrixR()(0, 0));
    const double rcond = r_max > 0.0 ? std::abs(qr.matrixR()(3, 3)) / r_max : 0.0;
    if (rcond < kRankTolerance)
      fail(ErrorCode::SingularDesign, "x and x' are collinear on the window at t0=" + csv::format10(t0));

    Eigen::Vector4d beta;
    if (rcond < kRidgeTolerance) {
      if (!(cfg.ridge > 0.0))
        fail(ErrorCode::SingularDesign, "ill-conditioned coefficient design and ridge disabled at t0=" +
                                            csv::format10(t0));
      Eigen::MatrixXd aug(m + 4, 4);
      aug.topRows(m) = design;
      aug.bottomRows(4) = std::sqrt(cfg.ridge) * Eigen::Matrix4d::Identity();
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 4);
      rhs.head(m) = response;
      beta = aug.householderQr().solve(rhs);
    } else {
      beta = qr.solve(response);
    }
    beta = beta.cwiseQuotient(col_norm);
    b1[i] = beta(0);
    b0[i] = beta(2);
    if (!std::isfinite(b0[i]) || !std::isfinite(b1[i]))
      fail(ErrorCode::NonFinite, "non-finite coefficient estimate at t0=" + csv::format10(t0));
  }
  return ode::CoefficientTrack(state.grid, std::move(b0), std::move(b1));
}

LeadFeatures extract_features(const ode::CoefficientTrack& track, const EstimatorConfig& cfg, std::string lead) {
  cfg.validate();
  const std::size_t n = track.size();
  const auto cut = static_cast<std::size_t>(std::floor(cfg.edge_trim * static_cast<double>(n)));
  if (2 * cut >= n) fail(ErrorCode::EmptyAfterTrim, "coefficient track is empty after edge trimming");

  auto best = [&](const std::vector<double>& values, double& value, double& when) {
    std::size_t arg = cut;
    double top = cfg.abs_max ? std::abs(values[cut]) : values[cut];
    for (std::size_t i = cut + 1; i < n - cut; ++i) {
      const double v = cfg.abs_max ? std::abs(values[i]) : values[i];
      if (v > top) {  // strict: earliest time wins ties
        top = v;
        arg = i;
      }
    }
    value = top;
    when = track.grid()[arg];
  };
  LeadFeatures f;
  f.lead = std::move(lead);
  best(track.b0(), f.max_b0, f.argmax_b0_t);
  best(track.b1(), f.max_b1, f.argmax_b1_t);
  return f;
}

std::vector<double> FeatureVector::values() const {
  std::vector<double> out;
  out.reserve(2 * leads.size());
  for (const auto& l : leads) {
    out.push_back(l.max_b0);
    out.push_back(l.max_b1);
  }
  return out;
}

const LeadFeatures* FeatureVector::find(std::string_view lead) const noexcept {
  for (const auto& l : leads)
    if (ingest::lead_name_equal(l.lead, lead)) return &l;
  return nullptr;
}

FeatureVector featurize_record(const ingest::SignalRecord& record, std::span<const std::string> leads,
                               const smoother::SmootherConfig& smoother_cfg, const EstimatorConfig& estimator_cfg) {
  std::vector<const ingest::LeadSignal*> selected;
  if (leads.empty()) {
    for (const auto& l : record.leads()) selected.push_back(&l);
  } else {
    for (const auto& name : leads) {
      const auto* lead = record.find_lead(name);
      if (!lead) fail(ErrorCode::MissingLead, record.record_id() + ": lead '" + name + "' not present");
      selected.push_back(lead);
    }
  }
  FeatureVector fv;
  fv.record_id = record.record_id();
  fv.label = record.label();
  for (const auto* lead : selected) {
    const auto state = smoother::smooth_lead(*lead, record.fs(), smoother_cfg);
    const auto track = fit_coefficients(state, estimator_cfg);
    fv.leads.push_back(extract_features(track, estimator_cfg, lead->name));
  }
  return fv;
}

std::string features_to_csv(std::span<const FeatureVector> features) {
  std::string out = "record_id,label,lead,max_b0,argmax_b0_t,max_b1,argmax_b1_t\n";
  for (const auto& fv : features)
    for (const auto& l : fv.leads)
      out += csv::join({fv.record_id, fv.label, l.lead, csv::format10(l.max_b0), csv::format10(l.argmax_b0_t),
                        csv::format10(l.max_b1), csv::format10(l.argmax_b1_t)}) +
             '\n';
  return out;
}

std::vector<FeatureVector> features_from_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  const csv::Row header{"record_id", "label", "lead", "max_b0", "argmax_b0_t", "max_b1", "argmax_b1_t"};
  if (rows.empty() || rows.front() != header)
    fail(ErrorCode::InvalidArgument, "features CSV must start with header " + csv::join(header));
  std::vector<FeatureVector> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      fail(ErrorCode::RaggedRows, "features CSV row " + std::to_string(r + 1) + " has " +
                                      std::to_string(row.size()) + " cells");
    double v[4];
    for (int c = 0; c < 4; ++c)
      if (!csv::parse_double(row[3 + c], v[c]))
        fail(ErrorCode::NonNumericCell, "features CSV cell '" + row[3 + c] + "' is not numeric");
    FeatureVector* fv = nullptr;
    for (auto& existing : out)
      if (existing.record_id == row[0]) fv = &existing;
    if (!fv) {
      out.push_back({row[0], row[1], {}});
      fv = &out.back();
    } else if (fv->label != row[1]) {
      fail(ErrorCode::InvalidArgument, "record '" + row[0] + "' has conflicting labels");
    }
    if (fv->find(row[2])) fail(ErrorCode::InvalidArgument, "record '" + row[0] + "' repeats lead '" + row[2] + "'");
    fv->leads.push_back({row[2], v[0], v[1], v[2], v[3]});
  }
  return out;
}

}  // namespace tvode::estimator
