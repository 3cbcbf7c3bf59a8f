#include "svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "error.hpp"

namespace tvode::svm {
namespace {

constexpr double kTau = 1e-12;

bool finite_rows(const FeatureRows& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) {
    return std::all_of(r.begin(), r.end(), [](double v) { return std::isfinite(v); });
  });
}

void check_shape(const FeatureRows& rows) {
  if (rows.empty()) fail(ErrorCode::TooFewRows, "no training rows");
  const std::size_t d = rows.front().size();
  if (d == 0) fail(ErrorCode::DimensionMismatch, "training rows have no features");
  for (const auto& r : rows)
    if (r.size() != d) fail(ErrorCode::DimensionMismatch, "training rows differ in dimensionality");
  if (!finite_rows(rows)) fail(ErrorCode::NonFinite, "training features must be finite");
}

struct MachineResult {
  BinaryMachine machine;
  std::vector<double> alpha;  // caller order
};

// SMO with maximal-violating-pair selection. Rows are visited in a
// canonical (sorted) order so the result does not depend on input order.
MachineResult train_machine(const FeatureRows& rows, std::span<const int> y, double c_pos, double c_neg,
                            const KernelSpec& kernel, double tol, int max_passes, TrainDiagnostics* diag) {
  const std::size_t n = rows.size();
  const bool has_pos = std::find(y.begin(), y.end(), 1) != y.end();
  const bool has_neg = std::find(y.begin(), y.end(), -1) != y.end();
  if (!has_pos || !has_neg) fail(ErrorCode::SingleClass, "binary training needs both classes");
  if (std::all_of(rows.begin(), rows.end(), [&](const auto& r) { return r == rows.front(); }))
    fail(ErrorCode::DegenerateFeatures, "all training rows are identical");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rows[a] != rows[b]) return rows[a] < rows[b];
    return y[a] > y[b];
  });

  std::vector<double> yy(n), cap(n);
  for (std::size_t k = 0; k < n; ++k) {
    yy[k] = y[order[k]];
    cap[k] = yy[k] > 0 ? c_pos : c_neg;
  }
  std::vector<double> Q(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) {
      const double v = yy[a] * yy[b] * kernel(rows[order[a]], rows[order[b]]);
      Q[a * n + b] = v;
      Q[b * n + a] = v;
    }

  std::vector<double> alpha(n, 0.0), G(n, -1.0);
  auto in_up = [&](std::size_t t) { return yy[t] > 0 ? alpha[t] < cap[t] : alpha[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return yy[t] > 0 ? alpha[t] > 0.0 : alpha[t] < cap[t]; };
  auto objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += alpha[t] * (G[t] - 1.0);
    return -0.5 * f;
  };

  const std::size_t max_iter = static_cast<std::size_t>(std::max(1, max_passes)) * std::max<std::size_t>(n, 100);
  std::size_t iter = 0;
  double gap = 0.0;
  bool converged = false;
  if (diag) diag->objective.clear();
  for (; iter < max_iter; ++iter) {
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double s = -yy[t] * G[t];
      if (in_up(t) && s > g_max) {
        g_max = s;
        i = t;
      }
      if (in_low(t) && s < g_min) {
        g_min = s;
        j = t;
      }
    }
    gap = g_max - g_min;
    if (i == n || j == n || gap <= tol) {
      converged = true;
      break;
    }

    const double* Qi = &Q[i * n];
    const double* Qj = &Q[j * n];
    const double old_ai = alpha[i], old_aj = alpha[j];
    const double Ci = cap[i], Cj = cap[j];
    if (yy[i] != yy[j]) {
      double quad = Qi[i] + Qj[j] + 2.0 * Qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > Ci - Cj) {
        if (alpha[i] > Ci) {
          alpha[i] = Ci;
          alpha[j] = Ci - diff;
        }
      } else if (alpha[j] > Cj) {
        alpha[j] = Cj;
        alpha[i] = Cj + diff;
      }
    } else {
      double quad = Qi[i] + Qj[j] - 2.0 * Qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > Ci) {
        if (alpha[i] > Ci) {
          alpha[i] = Ci;
          alpha[j] = sum - Ci;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > Cj) {
        if (alpha[j] > Cj) {
          alpha[j] = Cj;
          alpha[i] = sum - Cj;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) G[t] += Qi[t] * dai + Qj[t] * daj;
    if (diag) diag->objective.push_back(objective());
  }

  // Offset from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = yy[t] * G[t];
    if (alpha[t] >= cap[t]) {
      if (yy[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (yy[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);

  MachineResult result;
  result.machine.bias = -rho;
  result.alpha.assign(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    result.alpha[order[t]] = alpha[t];
    if (alpha[t] > 0.0) {
      result.machine.support.push_back(rows[order[t]]);
      result.machine.coef.push_back(alpha[t] * yy[t]);
      result.machine.upper.push_back(cap[t]);
    }
  }
  if (diag) {
    diag->alpha = result.alpha;
    diag->iterations = iter;
    diag->final_gap = gap;
    diag->converged = converged;
  }
  return result;
}

double class_cap(const SvmConfig& cfg, const std::string& label, std::size_t n_total, std::size_t n_classes,
                 std::size_t n_label) {
  double c = cfg.C;
  if (auto it = cfg.class_weights.find(label); it != cfg.class_weights.end()) c *= it->second;
  if (cfg.balanced && n_label > 0)
    c *= static_cast<double>(n_total) / (static_cast<double>(n_classes) * static_cast<double>(n_label));
  return c;
}

KernelSpec resolve_kernel(KernelSpec kernel, std::size_t n_features) {
  if (kernel.type == KernelType::Rbf && kernel.gamma <= 0.0) kernel.gamma = 1.0 / static_cast<double>(n_features);
  return kernel;
}

FeatureRows standardize_all(const Standardization& scaler, const FeatureRows& rows) {
  FeatureRows out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(scaler.apply(r));
  return out;
}

}  // namespace

double KernelSpec::operator()(std::span<const double> a, std::span<const double> b) const noexcept {
  if (type == KernelType::Linear) return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

void SvmConfig::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) fail(ErrorCode::InvalidConfig, "svm C must be > 0");
  if (kernel.type == KernelType::Rbf && !(kernel.gamma >= 0.0))
    fail(ErrorCode::InvalidConfig, "svm gamma must be > 0 (or 0 for automatic)");
  if (!(tol > 0.0)) fail(ErrorCode::InvalidConfig, "svm tol must be > 0");
  if (max_passes < 1) fail(ErrorCode::InvalidConfig, "svm max_passes must be >= 1");
  for (const auto& [label, w] : class_weights)
    if (!(w > 0.0)) fail(ErrorCode::InvalidConfig, "class weight for '" + label + "' must be > 0");
}

Standardization Standardization::fit(const FeatureRows& rows) {
  const std::size_t d = rows.front().size();
  Standardization s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  const double n = static_cast<double>(rows.size());
  std::vector<double> col(rows.size());
  for (std::size_t k = 0; k < d; ++k) {
    // Sorted accumulation keeps the result independent of row order.
    for (std::size_t r = 0; r < rows.size(); ++r) col[r] = rows[r][k];
    std::sort(col.begin(), col.end());
    double sum = 0.0;
    for (double v : col) sum += v;
    s.mean[k] = sum / n;
    double ss = 0.0;
    for (double v : col) ss += (v - s.mean[k]) * (v - s.mean[k]);
    const double sd = std::sqrt(ss / n);
    // Constant columns pass through unscaled.
    s.scale[k] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[k])) ? sd : 1.0;
  }
  return s;
}

Standardization Standardization::identity(std::size_t n_features) {
  return {std::vector<double>(n_features, 0.0), std::vector<double>(n_features, 1.0)};
}

std::vector<double> Standardization::apply(std::span<const double> row) const {
  std::vector<double> out(row.size());
  for (std::size_t k = 0; k < row.size(); ++k) out[k] = (row[k] - mean[k]) / scale[k];
  return out;
}

double BinaryMachine::decision(std::span<const double> row, const KernelSpec& kernel) const {
  double f = bias;
  for (std::size_t i = 0; i < support.size(); ++i) f += coef[i] * kernel(support[i], row);
  return f;
}

SvmModel train_binary(const FeatureRows& rows, std::span<const int> labels, const SvmConfig& cfg,
                      TrainDiagnostics* diagnostics) {
  cfg.validate();
  check_shape(rows);
  if (rows.size() != labels.size()) fail(ErrorCode::DimensionMismatch, "row and label counts differ");
  if (rows.size() < 2) fail(ErrorCode::TooFewRows, "binary training needs at least 2 rows");
  std::size_t n_pos = 0;
  for (int l : labels) {
    if (l != 1 && l != -1) fail(ErrorCode::InvalidArgument, "binary labels must be +1 or -1");
    n_pos += l == 1;
  }
  SvmModel model;
  model.classes = {"+1", "-1"};
  model.kernel = resolve_kernel(cfg.kernel, rows.front().size());
  model.standardize = cfg.standardize;
  model.scaler = cfg.standardize ? Standardization::fit(rows) : Standardization::identity(rows.front().size());
  const auto scaled = standardize_all(model.scaler, rows);
  const double c_pos = class_cap(cfg, "+1", rows.size(), 2, n_pos);
  const double c_neg = class_cap(cfg, "-1", rows.size(), 2, rows.size() - n_pos);
  auto result = train_machine(scaled, labels, c_pos, c_neg, model.kernel, cfg.tol, cfg.max_passes, diagnostics);
  result.machine.positive = 0;
  result.machine.negative = 1;
  model.machines.push_back(std::move(result.machine));
  return model;
}

SvmModel train_multiclass(const FeatureRows& rows, std::span<const std::string> labels, const SvmConfig& cfg,
                          std::span<const std::string> class_list) {
  cfg.validate();
  check_shape(rows);
  if (rows.size() != labels.size()) fail(ErrorCode::DimensionMismatch, "row and label counts differ");

  SvmModel model;
  if (class_list.empty()) {
    model.classes.assign(labels.begin(), labels.end());
    std::sort(model.classes.begin(), model.classes.end());
    model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  } else {
    model.classes.assign(class_list.begin(), class_list.end());
  }
  const std::size_t K = model.classes.size();
  if (K < 2) fail(ErrorCode::SingleClass, "training data has a single class");

  std::vector<std::size_t> class_of(rows.size());
  std::vector<std::size_t> counts(K, 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto it = std::find(model.classes.begin(), model.classes.end(), labels[r]);
    if (it == model.classes.end()) fail(ErrorCode::InvalidArgument, "label '" + labels[r] + "' not in class list");
    class_of[r] = static_cast<std::size_t>(it - model.classes.begin());
    ++counts[class_of[r]];
  }

  model.kernel = resolve_kernel(cfg.kernel, rows.front().size());
  model.standardize = cfg.standardize;
  model.scaler = cfg.standardize ? Standardization::fit(rows) : Standardization::identity(rows.front().size());
  const auto scaled = standardize_all(model.scaler, rows);

  for (std::size_t a = 0; a < K; ++a) {
    for (std::size_t b = a + 1; b < K; ++b) {
      if (counts[a] == 0 || counts[b] == 0)
        fail(ErrorCode::EmptyPair, "class pair (" + model.classes[a] + ", " + model.classes[b] + ") has an empty side");
      FeatureRows sub;
      std::vector<int> y;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (class_of[r] == a || class_of[r] == b) {
          sub.push_back(scaled[r]);
          y.push_back(class_of[r] == a ? 1 : -1);
        }
      }
      const double c_pos = class_cap(cfg, model.classes[a], rows.size(), K, counts[a]);
      const double c_neg = class_cap(cfg, model.classes[b], rows.size(), K, counts[b]);
      auto result = train_machine(sub, y, c_pos, c_neg, model.kernel, cfg.tol, cfg.max_passes, nullptr);
      result.machine.positive = a;
      result.machine.negative = b;
      model.machines.push_back(std::move(result.machine));
    }
  }
  return model;
}

SvmModel train(const FeatureRows& rows, std::span<const std::string> labels, const SvmConfig& cfg) {
  return train_multiclass(rows, labels, cfg);
}

Prediction predict(const SvmModel& model, std::span<const double> row) {
  if (row.size() != model.n_features())
    fail(ErrorCode::DimensionMismatch, "row has " + std::to_string(row.size()) + " features, model expects " +
                                           std::to_string(model.n_features()));
  const auto x = model.scaler.apply(row);
  if (model.machines.size() == 1) {
    const auto& m = model.machines.front();
    const double d = m.decision(x, model.kernel);
    return {model.classes[d >= 0.0 ? m.positive : m.negative], d};
  }
  std::vector<int> votes(model.classes.size(), 0);
  std::vector<double> margin(model.classes.size(), 0.0);
  for (const auto& m : model.machines) {
    const double d = m.decision(x, model.kernel);
    const std::size_t winner = d >= 0.0 ? m.positive : m.negative;
    ++votes[winner];
    margin[winner] += std::abs(d);
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < votes.size(); ++k)
    if (votes[k] > votes[best] || (votes[k] == votes[best] && margin[k] > margin[best])) best = k;
  return {model.classes[best], margin[best]};
}

}  // namespace tvode::svm
