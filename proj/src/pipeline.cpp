#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <thread>

#include "json.hpp"

#include "csv.hpp"
#include "error.hpp"
#include "ode.hpp"
#include "smoother.hpp"

namespace tvode::pipeline {
namespace fs = std::filesystem;
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

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

// Spelling of `name` among the available leads.
const std::string& resolve_lead(std::string_view name, std::span<const std::string> available) {
  for (const auto& a : available)
    if (ingest::lead_name_equal(a, name)) return a;
  fail(ErrorCode::UnknownLeadSet, "lead '" + std::string(name) + "' is not present in the features");
}

LeadSet single(const std::string& lead) { return {lead_display_name(lead), {lead}}; }

LeadSet combined(std::vector<std::string> leads) {
  const auto& standard = standard_leads();
  bool is_standard = leads.size() == standard.size();
  for (std::size_t i = 0; is_standard && i < leads.size(); ++i)
    is_standard = ingest::lead_name_equal(leads[i], standard[i]);
  std::string name;
  if (is_standard) {
    name = "12 leads combined";
  } else {
    for (std::size_t i = 0; i < leads.size(); ++i) name += (i ? ", " : "") + lead_display_name(leads[i]);
    name += " combined";
  }
  return {name, std::move(leads)};
}

bool has_all(std::span<const std::string> available, std::span<const std::string> wanted) {
  return std::all_of(wanted.begin(), wanted.end(), [&](const auto& w) {
    return std::any_of(available.begin(), available.end(), [&](const auto& a) { return ingest::lead_name_equal(a, w); });
  });
}

void append_table(std::vector<LeadSet>& sets, std::span<const std::string> available) {
  const auto& standard = standard_leads();
  for (const auto& l : standard) sets.push_back(single(resolve_lead(l, available)));
  std::vector<std::string> limb, all;
  for (std::size_t i = 0; i < standard.size(); ++i) {
    const auto& name = resolve_lead(standard[i], available);
    if (i < 3) limb.push_back(name);
    all.push_back(name);
  }
  sets.push_back(combined(limb));
  sets.push_back(combined(all));
}

double quantize(double v) {
  double out = 0.0;
  csv::parse_double(csv::format10(v), out);
  return out;
}

fs::path record_path(const fs::path& data_dir, const std::string& record_id) {
  const fs::path base = data_dir / record_id;
  fs::path as_csv = base;
  as_csv += ".csv";
  return fs::exists(as_csv) ? as_csv : base;
}

std::string describe(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->code())) + ": " + err->what();
  return std::string("Error: ") + e.what();
}

std::string choose_positive(const std::vector<std::string>& classes, const std::string& configured) {
  if (!configured.empty()) {
    if (std::find(classes.begin(), classes.end(), configured) == classes.end())
      fail(ErrorCode::InvalidConfig, "report.positive '" + configured + "' is not a label in the features");
    return configured;
  }
  if (std::find(classes.begin(), classes.end(), "MI") != classes.end()) return "MI";
  for (const auto& c : classes)
    if (c != "HC") return c;
  return classes.front();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create directory " + dir.string() + ": " + ec.message());
}

// ---- synth spec ----

using nlohmann::json;

double number_or(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) fail(ErrorCode::InvalidConfig, std::string("synth spec: '") + key + "' must be a number");
  return obj[key].get<double>();
}

bool bool_or(const json& obj, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) fail(ErrorCode::InvalidConfig, std::string("synth spec: '") + key + "' must be a boolean");
  return obj[key].get<bool>();
}

struct Linear {
  double intercept = 0.0;
  double slope = 0.0;
};

Linear linear_or(const json& obj, const char* key) {
  Linear l;
  if (!obj.contains(key)) return l;
  const auto& v = obj[key];
  if (v.is_number()) {
    l.intercept = v.get<double>();
  } else if (v.is_object()) {
    l.intercept = number_or(v, "intercept", 0.0);
    l.slope = number_or(v, "slope", 0.0);
  } else {
    fail(ErrorCode::InvalidConfig, std::string("synth spec: '") + key + "' must be a number or {intercept, slope}");
  }
  return l;
}

std::vector<std::string> spec_leads(const json& cls) {
  if (!cls.contains("leads")) return {"ii"};
  const auto& v = cls["leads"];
  if (v.is_string()) {
    auto names = expand_leads(v.get<std::string>());
    if (names.empty()) fail(ErrorCode::InvalidConfig, "synth spec: leads must name the leads to generate");
    return names;
  }
  if (v.is_number_unsigned()) {
    const auto n = v.get<std::size_t>();
    if (n < 1 || n > standard_leads().size())
      fail(ErrorCode::InvalidConfig, "synth spec: integer 'leads' must be within 1..12");
    return {standard_leads().begin(), standard_leads().begin() + static_cast<std::ptrdiff_t>(n)};
  }
  if (v.is_array()) {
    std::vector<std::string> names;
    for (const auto& e : v) {
      if (!e.is_string()) fail(ErrorCode::InvalidConfig, "synth spec: lead names must be strings");
      names.push_back(e.get<std::string>());
    }
    if (names.empty()) fail(ErrorCode::InvalidConfig, "synth spec: empty lead list");
    return names;
  }
  fail(ErrorCode::InvalidConfig, "synth spec: 'leads' must be a list, \"all12\" or a count");
}

std::string pad3(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return buf;
}

}  // namespace

std::string lead_display_name(std::string_view lead) {
  const std::string l = lower(lead);
  if (l == "i" || l == "ii" || l == "iii") return std::string(l.size(), 'I');
  if (l == "avr") return "aVR";
  if (l == "avl") return "aVL";
  if (l == "avf") return "aVF";
  if (l.size() == 2 && l[0] == 'v' && l[1] >= '1' && l[1] <= '6') return std::string("V") + l[1];
  return std::string(lead);
}

std::vector<LeadSet> parse_lead_sets(std::string_view selection, std::span<const std::string> available) {
  const std::string sel = trim(selection);
  std::vector<LeadSet> sets;
  if (sel == "table") {
    append_table(sets, available);
  } else if (sel == "auto") {
    if (has_all(available, standard_leads())) {
      append_table(sets, available);
    } else {
      for (const auto& l : available) sets.push_back(single(l));
      if (available.size() > 1) sets.push_back(combined({available.begin(), available.end()}));
    }
  } else if (sel == "each") {
    for (const auto& l : available) sets.push_back(single(l));
  } else {
    for (const auto& part : split(sel, ';')) {
      if (part.empty()) fail(ErrorCode::UnknownLeadSet, "empty lead set in '" + sel + "'");
      std::vector<std::string> leads;
      if (part == "all12") {
        for (const auto& l : standard_leads()) leads.push_back(resolve_lead(l, available));
      } else {
        for (const auto& name : split(part, ',')) {
          if (name.empty()) fail(ErrorCode::UnknownLeadSet, "empty lead name in '" + part + "'");
          leads.push_back(resolve_lead(name, available));
        }
      }
      sets.push_back(leads.size() == 1 ? single(leads.front()) : combined(std::move(leads)));
    }
  }
  if (sets.empty()) fail(ErrorCode::UnknownLeadSet, "lead selection '" + sel + "' yields no lead set");
  return sets;
}

LeadSetRows rows_for_lead_set(std::span<const estimator::FeatureVector> features, const LeadSet& set) {
  LeadSetRows out;
  for (const auto& fv : features) {
    std::vector<double> row;
    bool complete = true;
    for (const auto& name : set.leads) {
      const auto* l = fv.find(name);
      if (!l) {
        complete = false;
        break;
      }
      row.push_back(l->max_b0);
      row.push_back(l->max_b1);
    }
    if (!complete) continue;
    out.rows.push_back(std::move(row));
    out.labels.push_back(fv.label);
    out.record_ids.push_back(fv.record_id);
  }
  return out;
}

FeaturizeResult featurize_manifest(std::span<const ingest::ManifestEntry> manifest, const fs::path& data_dir,
                                   const PipelineConfig& cfg, std::size_t workers) {
  cfg.validate();
  const auto leads = expand_leads(cfg.leads);
  const std::size_t n = manifest.size();
  std::vector<std::optional<estimator::FeatureVector>> done(n);
  std::vector<std::string> failure(n);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto& entry = manifest[i];
      try {
        const auto record = ingest::load_record(record_path(data_dir, entry.record_id), entry.label, cfg.csv_fs);
        auto fv = estimator::featurize_record(record, leads, cfg.smoother, cfg.estimator);
        fv.record_id = entry.record_id;
        fv.label = entry.label;
        for (auto& l : fv.leads) {
          l.max_b0 = quantize(l.max_b0);
          l.argmax_b0_t = quantize(l.argmax_b0_t);
          l.max_b1 = quantize(l.max_b1);
          l.argmax_b1_t = quantize(l.argmax_b1_t);
        }
        done[i] = std::move(fv);
      } catch (const std::exception& e) {
        failure[i] = describe(e);
      }
    }
  };
  const std::size_t pool = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (pool == 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(work);
  }

  FeaturizeResult result;
  for (std::size_t i = 0; i < n; ++i) {
    if (done[i]) result.features.push_back(std::move(*done[i]));
    else result.rejects.push_back({manifest[i].record_id, failure[i]});
  }
  return result;
}

EvaluateResult evaluate_features(std::span<const estimator::FeatureVector> features, const PipelineConfig& cfg,
                                 std::optional<eval::Task> task, std::string_view lead_sets,
                                 const std::map<std::string, std::string>& subjects) {
  cfg.validate();
  if (features.empty()) fail(ErrorCode::TooFewRows, "no feature rows to evaluate");
  std::vector<std::string> labels;
  std::vector<std::string> available;
  for (const auto& fv : features) {
    if (std::find(labels.begin(), labels.end(), fv.label) == labels.end()) labels.push_back(fv.label);
    for (const auto& l : fv.leads)
      if (std::none_of(available.begin(), available.end(),
                       [&](const auto& a) { return ingest::lead_name_equal(a, l.lead); }))
        available.push_back(l.lead);
  }
  if (labels.size() < 2) fail(ErrorCode::SingleClass, "features carry a single label '" + labels.front() + "'");
  const auto classes = eval::canonical_class_order(labels);

  EvaluateResult result;
  result.task = task.value_or(classes.size() == 2 ? eval::Task::Binary : eval::Task::Multiclass);
  if (result.task == eval::Task::Binary && classes.size() != 2)
    fail(ErrorCode::InvalidArgument,
         "binary evaluation needs exactly two labels, features carry " + std::to_string(classes.size()));

  eval::CvOptions options;
  options.task = result.task;
  options.classes = classes;
  if (result.task == eval::Task::Binary) options.positive = choose_positive(classes, cfg.positive);

  const auto grid = cfg.svm_grid();
  for (const auto& set : parse_lead_sets(lead_sets, available)) {
    auto data = rows_for_lead_set(features, set);
    if (data.rows.empty()) fail(ErrorCode::UnknownLeadSet, "no record carries every lead of '" + set.name + "'");
    options.groups.clear();
    if (cfg.cv_group_by_subject) {
      for (const auto& id : data.record_ids) {
        const auto it = subjects.find(id);
        options.groups.push_back(it == subjects.end() || it->second.empty() ? id : it->second);
      }
    }
    result.rows.push_back(
        {set.name, eval::run_cv(data.rows, data.labels, cfg.cv_k, grid, cfg.cv_seed, options)});
  }
  return result;
}

void cmd_featurize(const fs::path& manifest, const PipelineConfig& cfg, const fs::path& out_dir,
                   const fs::path& data_dir) {
  const auto entries = ingest::parse_manifest(csv::read_file(manifest));
  const fs::path dir = data_dir.empty() ? manifest.parent_path() : data_dir;
  const auto result = featurize_manifest(entries, dir, cfg, workers_from_env(cfg.workers));

  ensure_dir(out_dir);
  std::string rejects = "record_id,reason\n";
  for (const auto& r : result.rejects) rejects += csv::join({r.record_id, r.reason}) + '\n';
  csv::write_file(out_dir / "rejects.csv", rejects);
  csv::write_file(out_dir / "config_used.txt", cfg.to_text());
  if (result.features.empty())
    fail(ErrorCode::EmptyOutput, "no record produced features (" + std::to_string(result.rejects.size()) +
                                     " rejected, see rejects.csv)");
  csv::write_file(out_dir / "features.csv", estimator::features_to_csv(result.features));
}

void cmd_evaluate(const fs::path& features, const PipelineConfig& cfg, std::optional<eval::Task> task,
                  std::string_view lead_sets, const fs::path& out_dir, const fs::path& groups) {
  const auto fvs = estimator::features_from_csv(csv::read_file(features));
  std::map<std::string, std::string> subjects;
  if (!groups.empty()) {
    const auto rows = csv::parse(csv::read_file(groups));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r == 0 && !rows[r].empty() && rows[r][0] == "record_id") continue;
      if (rows[r].size() < 2) fail(ErrorCode::RaggedRows, "groups row " + std::to_string(r + 1) + " needs record_id,subject");
      subjects[rows[r][0]] = rows[r].back();
    }
  }
  const auto result = evaluate_features(fvs, cfg, task, lead_sets, subjects);

  ensure_dir(out_dir);
  PipelineConfig used = cfg;
  used.lead_sets = std::string(lead_sets);
  std::string provenance = used.to_text();
  provenance += std::string("task=") + (result.task == eval::Task::Binary ? "binary" : "multiclass") + '\n';
  csv::write_file(out_dir / "config_used.txt", provenance);
  if (result.task == eval::Task::Binary) {
    csv::write_file(out_dir / "report.csv", eval::binary_report_csv(result.rows));
    csv::write_file(out_dir / "report.txt", eval::binary_report_text(result.rows));
  } else {
    csv::write_file(out_dir / "report_train.csv", eval::multiclass_report_csv(result.rows, false));
    csv::write_file(out_dir / "report_test.csv", eval::multiclass_report_csv(result.rows, true));
    csv::write_file(out_dir / "report.txt", eval::multiclass_report_text(result.rows));
  }
}

void cmd_synth(const fs::path& spec, const fs::path& out_dir) {
  cmd_synth_text(csv::read_file(spec), spec.parent_path(), out_dir);
}

void cmd_synth_text(std::string_view spec_json, const fs::path& spec_dir, const fs::path& out_dir) {
  json spec;
  try {
    spec = json::parse(spec_json);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("synth spec is not valid JSON: ") + e.what());
  }
  if (!spec.is_object() || !spec.contains("classes") || !spec["classes"].is_array() || spec["classes"].empty())
    fail(ErrorCode::InvalidConfig, "synth spec needs a non-empty 'classes' array");

  const double fs_hz = number_or(spec, "fs", 1000.0);
  const double duration = number_or(spec, "duration", 2.0);
  const double noise_default = number_or(spec, "noise_sd", 0.0);
  if (!(fs_hz > 0.0) || !(duration > 0.0)) fail(ErrorCode::InvalidConfig, "synth spec: fs and duration must be > 0");
  if (!spec.contains("seed") || !spec["seed"].is_number_unsigned())
    fail(ErrorCode::InvalidConfig, "synth spec: 'seed' must be a non-negative integer");
  const auto seed = spec["seed"].get<std::uint64_t>();

  ensure_dir(out_dir);
  std::vector<ingest::ManifestEntry> manifest;
  std::uint64_t stream = 0;
  for (const auto& cls : spec["classes"]) {
    if (!cls.is_object() || !cls.contains("label") || !cls["label"].is_string())
      fail(ErrorCode::InvalidConfig, "synth spec: every class needs a string 'label'");
    const auto label = cls["label"].get<std::string>();
    if (!cls.contains("count") || !cls["count"].is_number_unsigned())
      fail(ErrorCode::InvalidConfig, "synth spec: class '" + label + "' needs a non-negative integer 'count'");
    const auto count = cls["count"].get<std::size_t>();
    const auto leads = spec_leads(cls);
    const Linear b0 = linear_or(cls, "b0");
    const Linear b1 = linear_or(cls, "b1");
    const double x0 = number_or(cls, "x0", 1.0);
    const double v0 = number_or(cls, "v0", 0.0);
    const double coef_jitter = number_or(cls, "coef_jitter", 0.0);
    const double amplitude_jitter = number_or(cls, "amplitude_jitter", 0.0);
    const bool phase_random = bool_or(cls, "phase_random", false);
    const double noise_sd = number_or(cls, "noise_sd", noise_default);
    if (noise_sd < 0.0 || coef_jitter < 0.0 || amplitude_jitter < 0.0)
      fail(ErrorCode::InvalidConfig, "synth spec: noise and jitter must be >= 0");
    std::optional<ode::CoefficientTrack> fixed_track;
    if (cls.contains("track_csv")) {
      if (!cls["track_csv"].is_string()) fail(ErrorCode::InvalidConfig, "synth spec: 'track_csv' must be a path");
      fs::path p = cls["track_csv"].get<std::string>();
      if (p.is_relative()) p = spec_dir / p;
      fixed_track = ode::track_from_csv(csv::read_file(p));
    }

    for (std::size_t r = 0; r < count; ++r) {
      std::mt19937_64 rng(eval::derive_seed(seed, stream++));
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      std::vector<ode::CoefficientTrack> tracks;
      std::vector<ode::OdeInitialState> inits;
      for (std::size_t l = 0; l < leads.size(); ++l) {
        const double j0 = 1.0 + coef_jitter * unit(rng);
        const double j1 = 1.0 + coef_jitter * unit(rng);
        const double amp = 1.0 + amplitude_jitter * unit(rng);
        const double phase = phase_random ? std::numbers::pi * (unit(rng) + 1.0) : 0.0;
        if (fixed_track) {
          tracks.push_back(*fixed_track);
        } else {
          tracks.push_back(ode::linear_track(0.0, duration, 201, b0.intercept * j0, b0.slope * j0, b1.intercept * j1,
                                             b1.slope * j1));
        }
        const double omega = std::sqrt(std::max(tracks.back().at(0.0).b0, 0.0));
        inits.push_back({0.0, amp * (x0 * std::cos(phase) + (omega > 0.0 ? v0 / omega : 0.0) * std::sin(phase)),
                         amp * (v0 * std::cos(phase) - x0 * omega * std::sin(phase))});
      }
      const std::string id = label + "_" + pad3(r);
      const auto record =
          ode::synth_record(tracks, inits, leads, fs_hz, duration, noise_sd, rng(), id, label);
      ingest::write_wfdb(record, out_dir);
      for (std::size_t l = 0; l < leads.size(); ++l)
        csv::write_file(out_dir / (id + "." + leads[l] + ".track.csv"), ode::track_to_csv(tracks[l]));
      manifest.push_back({id, label, {}});
    }
  }
  if (manifest.empty()) fail(ErrorCode::EmptyOutput, "synth spec produces no records");
  csv::write_file(out_dir / "manifest.csv", ingest::emit_manifest(manifest));
}

CompareSummary cmd_compare_spline(const fs::path& record_file, std::string_view lead_name, const PipelineConfig& cfg,
                                  const fs::path& out_dir) {
  cfg.validate();
  const auto record = ingest::load_record(record_file, {}, cfg.csv_fs);
  const auto* lead = record.find_lead(lead_name);
  if (!lead) fail(ErrorCode::MissingLead, record.record_id() + ": lead '" + std::string(lead_name) + "' not present");
  const double fs_hz = record.fs();

  const auto spline = smoother::cubic_spline_fit(*lead, fs_hz, cfg.knot_stride);
  const auto state = smoother::smooth_lead(*lead, fs_hz, cfg.smoother);
  const auto track = estimator::fit_coefficients(state, cfg.estimator);

  const std::size_t m = track.size();
  const auto cut = static_cast<std::size_t>(std::floor(cfg.estimator.edge_trim * static_cast<double>(m)));
  if (2 * cut + 1 >= m) fail(ErrorCode::EmptyAfterTrim, "coefficient track is empty after edge trimming");
  const ode::OdeInitialState init{state.grid[cut], state.x[cut], state.dx[cut]};
  const auto recon = ode::solve_ode(track, init, fs_hz, state.grid[m - 1 - cut] - state.grid[cut]);

  const auto first = static_cast<std::size_t>(std::llround(init.t0 * fs_hz));
  std::string out = "t,y,x_ode_recon,x_spline\n";
  CompareSummary summary;
  double se_ode = 0.0, se_spline = 0.0;
  for (std::size_t k = 0; k < recon.t.size(); ++k) {
    const std::size_t i = first + k;
    if (i >= spline.x.size() || i >= lead->samples.size()) break;
    const double y = lead->samples[i];
    se_ode += (recon.x[k] - y) * (recon.x[k] - y);
    se_spline += (spline.x[i] - y) * (spline.x[i] - y);
    out += csv::join({csv::format10(recon.t[k]), csv::format10(y), csv::format10(recon.x[k]),
                      csv::format10(spline.x[i])}) +
           '\n';
    ++summary.rows;
  }
  if (summary.rows == 0) fail(ErrorCode::EmptyOutput, "ODE reconstruction and spline do not overlap");
  summary.rmse_ode = std::sqrt(se_ode / static_cast<double>(summary.rows));
  summary.rmse_spline = std::sqrt(se_spline / static_cast<double>(summary.rows));

  ensure_dir(out_dir);
  csv::write_file(out_dir / "compare.csv", out);
  csv::write_file(out_dir / "summary.txt", "rmse_ode=" + csv::format10(summary.rmse_ode) +
                                               ",rmse_spline=" + csv::format10(summary.rmse_spline) + '\n');
  csv::write_file(out_dir / "config_used.txt", cfg.to_text());
  return summary;
}

eval::Task parse_task(std::string_view name) {
  if (name == "binary") return eval::Task::Binary;
  if (name == "multiclass") return eval::Task::Multiclass;
  fail(ErrorCode::InvalidArgument, "unknown task '" + std::string(name) + "' (binary or multiclass)");
}

}  // namespace tvode::pipeline
