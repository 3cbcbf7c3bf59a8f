#include "config.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "csv.hpp"
#include "error.hpp"

namespace tvode::pipeline {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view key, std::string_view value) {
  double v = 0.0;
  if (!csv::parse_double(value, v))
    fail(ErrorCode::InvalidConfig, std::string(key) + ": '" + std::string(value) + "' is not a number");
  return v;
}

std::uint64_t to_uint(std::string_view key, std::string_view value) {
  const std::string s(value);
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
    fail(ErrorCode::InvalidConfig, std::string(key) + ": '" + s + "' is not a non-negative integer");
  try {
    return std::stoull(s);
  } catch (...) {
    fail(ErrorCode::InvalidConfig, std::string(key) + ": '" + s + "' is out of range");
  }
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  fail(ErrorCode::InvalidConfig, std::string(key) + ": '" + std::string(value) + "' is not a boolean");
}

std::string join_doubles(const std::vector<double>& v, bool auto_zero) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += auto_zero && v[i] == 0.0 ? "auto" : csv::format10(v[i]);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& standard_leads() {
  static const std::vector<std::string> leads{"i",  "ii", "iii", "avr", "avl", "avf",
                                              "v1", "v2", "v3",  "v4",  "v5",  "v6"};
  return leads;
}

std::vector<std::string> expand_leads(std::string_view selection) {
  const std::string s = trim(selection);
  if (s == "all") return {};
  if (s == "all12") return standard_leads();
  auto names = split(s, ',');
  if (std::any_of(names.begin(), names.end(), [](const auto& n) { return n.empty(); }))
    fail(ErrorCode::InvalidConfig, "empty lead name in '" + s + "'");
  return names;
}

void PipelineConfig::set(std::string_view raw_key, std::string_view raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "smoother.poly_order") smoother.poly_order = static_cast<int>(to_uint(key, value));
  else if (key == "smoother.bandwidth") smoother.bandwidth = to_double(key, value);
  else if (key == "smoother.kernel") smoother.kernel = smoother::parse_kernel(value);
  else if (key == "smoother.eval_stride") smoother.eval_stride = to_uint(key, value);
  else if (key == "smoother.ridge") smoother.ridge = to_double(key, value);
  else if (key == "estimator.window") estimator.window = to_double(key, value);
  else if (key == "estimator.ridge") estimator.ridge = to_double(key, value);
  else if (key == "estimator.edge_trim") estimator.edge_trim = to_double(key, value);
  else if (key == "estimator.abs_max") estimator.abs_max = to_bool(key, value);
  else if (key == "svm.kernel") {
    if (value == "rbf") svm_kernel = svm::KernelType::Rbf;
    else if (value == "linear") svm_kernel = svm::KernelType::Linear;
    else fail(ErrorCode::InvalidConfig, "svm.kernel: unknown kernel '" + value + "'");
  } else if (key == "svm.C") {
    svm_c.clear();
    for (const auto& v : split(value, ',')) svm_c.push_back(to_double(key, v));
  } else if (key == "svm.gamma") {
    svm_gamma.clear();
    for (const auto& v : split(value, ',')) svm_gamma.push_back(v == "auto" ? 0.0 : to_double(key, v));
  } else if (key == "svm.tol") svm_tol = to_double(key, value);
  else if (key == "svm.max_passes") svm_max_passes = static_cast<int>(to_uint(key, value));
  else if (key == "svm.standardize") svm_standardize = to_bool(key, value);
  else if (key == "svm.balanced") svm_balanced = to_bool(key, value);
  else if (key == "cv.k") cv_k = to_uint(key, value);
  else if (key == "cv.seed") cv_seed = to_uint(key, value);
  else if (key == "cv.group_by_subject") cv_group_by_subject = to_bool(key, value);
  else if (key == "leads") leads = value;
  else if (key == "report.lead_sets") lead_sets = value;
  else if (key == "report.positive") positive = value;
  else if (key == "input.csv_fs") csv_fs = to_double(key, value);
  else if (key == "compare.knot_stride") knot_stride = to_uint(key, value);
  else if (key == "workers") workers = std::max<std::size_t>(1, to_uint(key, value));
  else fail(ErrorCode::InvalidConfig, "unknown configuration key '" + key + "'");
}

void PipelineConfig::validate() const {
  smoother.validate();
  estimator.validate();
  if (svm_c.empty() || svm_gamma.empty()) fail(ErrorCode::InvalidConfig, "svm.C and svm.gamma need at least one value");
  for (const auto& c : svm_grid()) c.validate();
  if (cv_k < 2) fail(ErrorCode::TooFewRows, "cv.k must be >= 2");
  if (!(csv_fs > 0.0)) fail(ErrorCode::InvalidConfig, "input.csv_fs must be > 0");
  if (knot_stride < 1) fail(ErrorCode::InvalidConfig, "compare.knot_stride must be >= 1");
  expand_leads(leads);
}

std::string PipelineConfig::to_text() const {
  std::ostringstream out;
  out << "smoother.poly_order=" << smoother.poly_order << '\n'
      << "smoother.bandwidth=" << csv::format10(smoother.bandwidth) << '\n'
      << "smoother.kernel=" << smoother::to_string(smoother.kernel) << '\n'
      << "smoother.eval_stride=" << smoother.eval_stride << '\n'
      << "smoother.ridge=" << csv::format10(smoother.ridge) << '\n'
      << "estimator.window=" << csv::format10(estimator.window) << '\n'
      << "estimator.ridge=" << csv::format10(estimator.ridge) << '\n'
      << "estimator.edge_trim=" << csv::format10(estimator.edge_trim) << '\n'
      << "estimator.abs_max=" << (estimator.abs_max ? "true" : "false") << '\n'
      << "svm.kernel=" << (svm_kernel == svm::KernelType::Rbf ? "rbf" : "linear") << '\n'
      << "svm.C=" << join_doubles(svm_c, false) << '\n'
      << "svm.gamma=" << join_doubles(svm_gamma, true) << '\n'
      << "svm.tol=" << csv::format10(svm_tol) << '\n'
      << "svm.max_passes=" << svm_max_passes << '\n'
      << "svm.standardize=" << (svm_standardize ? "true" : "false") << '\n'
      << "svm.balanced=" << (svm_balanced ? "true" : "false") << '\n'
      << "cv.k=" << cv_k << '\n'
      << "cv.seed=" << cv_seed << '\n'
      << "cv.group_by_subject=" << (cv_group_by_subject ? "true" : "false") << '\n'
      << "leads=" << leads << '\n'
      << "report.lead_sets=" << lead_sets << '\n'
      << "report.positive=" << positive << '\n'
      << "input.csv_fs=" << csv::format10(csv_fs) << '\n'
      << "compare.knot_stride=" << knot_stride << '\n';
  return out.str();
}

std::vector<svm::SvmConfig> PipelineConfig::svm_grid() const {
  std::vector<svm::SvmConfig> grid;
  for (double c : svm_c) {
    for (double g : svm_gamma) {
      svm::SvmConfig cfg;
      cfg.kernel.type = svm_kernel;
      cfg.kernel.gamma = g;
      cfg.C = c;
      cfg.tol = svm_tol;
      cfg.max_passes = svm_max_passes;
      cfg.standardize = svm_standardize;
      cfg.balanced = svm_balanced;
      grid.push_back(cfg);
      if (svm_kernel == svm::KernelType::Linear) break;  // gamma is irrelevant
    }
  }
  return grid;
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::InvalidConfig, "config line " + std::to_string(lineno) + " is not key=value");
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) { return parse_config(csv::read_file(path)); }

std::size_t workers_from_env(std::size_t fallback) {
  const char* env = std::getenv("TVODE_WORKERS");
  if (!env || !*env) return fallback;
  const auto v = to_uint("TVODE_WORKERS", env);
  if (v == 0) fail(ErrorCode::InvalidConfig, "TVODE_WORKERS must be >= 1");
  return v;
}

}  // namespace tvode::pipeline
