#include "tvode/tvode.h"

#include <cstring>
#include <string>

#include "config.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "ingest.hpp"
#include "pipeline.hpp"
#include "svm.hpp"

struct tvode_config {
  tvode::pipeline::PipelineConfig cfg;
};

struct tvode_record {
  tvode::ingest::SignalRecord record;
};

struct tvode_model {
  tvode::svm::SvmModel model;
};

namespace {

thread_local std::string last_error;

static_assert(static_cast<int>(tvode::ErrorCode::EmptyOutput) == TVODE_EMPTY_OUTPUT,
              "tvode_status must mirror tvode::ErrorCode");

template <class F>
tvode_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return TVODE_OK;
  } catch (const tvode::Error& e) {
    last_error = e.what();
    return static_cast<tvode_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return TVODE_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return TVODE_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return TVODE_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) tvode::fail(tvode::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

const tvode::pipeline::PipelineConfig& config_or_default(const tvode_config* cfg) {
  static const tvode::pipeline::PipelineConfig defaults;
  return cfg ? cfg->cfg : defaults;
}

}  // namespace

extern "C" {

const char* tvode_version(void) { return "0.1.0"; }

const char* tvode_status_name(tvode_status status) {
  if (status == TVODE_OK) return "Ok";
  if (status >= TVODE_INVALID_ARGUMENT && status <= TVODE_EMPTY_OUTPUT)
    return tvode::to_string(static_cast<tvode::ErrorCode>(status));
  return "Internal";
}

const char* tvode_last_error(void) { return last_error.c_str(); }

tvode_status tvode_config_new(tvode_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new tvode_config{};
  });
}

tvode_status tvode_config_load(const char* path, tvode_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new tvode_config{tvode::pipeline::load_config(path)};
  });
}

tvode_status tvode_config_set(tvode_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(value, "value");
    auto updated = cfg->cfg;
    updated.set(key, value);
    cfg->cfg = std::move(updated);
  });
}

tvode_status tvode_config_text(const tvode_config* cfg, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    require(cfg, "cfg");
    const auto text = cfg->cfg.to_text();
    if (needed) *needed = text.size() + 1;
    if (buf && cap > 0) {
      const std::size_t n = std::min(cap - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
  });
}

void tvode_config_free(tvode_config* cfg) { delete cfg; }

tvode_status tvode_record_load(const char* path, const char* label, double csv_fs, tvode_record** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new tvode_record{tvode::ingest::load_record(path, label ? label : "", csv_fs)};
  });
}

double tvode_record_fs(const tvode_record* rec) { return rec ? rec->record.fs() : 0.0; }

size_t tvode_record_lead_count(const tvode_record* rec) { return rec ? rec->record.leads().size() : 0; }

size_t tvode_record_sample_count(const tvode_record* rec) { return rec ? rec->record.duration_samples() : 0; }

const char* tvode_record_lead_name(const tvode_record* rec, size_t lead) {
  if (!rec || lead >= rec->record.leads().size()) return nullptr;
  return rec->record.leads()[lead].name.c_str();
}

const double* tvode_record_lead_samples(const tvode_record* rec, size_t lead) {
  if (!rec || lead >= rec->record.leads().size()) return nullptr;
  return rec->record.leads()[lead].samples.data();
}

void tvode_record_free(tvode_record* rec) { delete rec; }

tvode_status tvode_model_train(const double* rows, size_t n_rows, size_t n_features, const char* const* labels,
                               const tvode_config* cfg, tvode_model** out) {
  return guarded([&] {
    require(rows, "rows");
    require(labels, "labels");
    require(out, "out");
    if (n_rows == 0 || n_features == 0) tvode::fail(tvode::ErrorCode::TooFewRows, "empty training matrix");
    tvode::svm::FeatureRows matrix(n_rows);
    std::vector<std::string> names(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
      matrix[r].assign(rows + r * n_features, rows + (r + 1) * n_features);
      require(labels[r], "labels[i]");
      names[r] = labels[r];
    }
    const auto grid = config_or_default(cfg).svm_grid();
    *out = new tvode_model{tvode::svm::train(matrix, names, grid.front())};
  });
}

tvode_status tvode_model_predict(const tvode_model* model, const double* row, size_t n_features, char* label,
                                 size_t cap, double* decision) {
  return guarded([&] {
    require(model, "model");
    require(row, "row");
    const auto p = tvode::svm::predict(model->model, std::span<const double>(row, n_features));
    if (label && cap > 0) {
      const std::size_t n = std::min(cap - 1, p.label.size());
      std::memcpy(label, p.label.data(), n);
      label[n] = '\0';
    }
    if (decision) *decision = p.decision;
  });
}

size_t tvode_model_feature_count(const tvode_model* model) { return model ? model->model.n_features() : 0; }

tvode_status tvode_model_save(const tvode_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    tvode::csv::write_file(path, tvode::svm::to_json(model->model));
  });
}

tvode_status tvode_model_load(const char* path, tvode_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new tvode_model{tvode::svm::from_json(tvode::csv::read_file(path))};
  });
}

void tvode_model_free(tvode_model* model) { delete model; }

tvode_status tvode_featurize(const char* manifest, const tvode_config* cfg, const char* out_dir,
                             const char* data_dir) {
  return guarded([&] {
    require(manifest, "manifest");
    require(out_dir, "out_dir");
    tvode::pipeline::cmd_featurize(manifest, config_or_default(cfg), out_dir, data_dir ? data_dir : "");
  });
}

tvode_status tvode_evaluate(const char* features, const tvode_config* cfg, const char* task, const char* lead_sets,
                            const char* out_dir, const char* groups) {
  return guarded([&] {
    require(features, "features");
    require(out_dir, "out_dir");
    const auto& c = config_or_default(cfg);
    std::optional<tvode::eval::Task> t;
    if (task) t = tvode::pipeline::parse_task(task);
    tvode::pipeline::cmd_evaluate(features, c, t, lead_sets ? lead_sets : c.lead_sets, out_dir,
                                  groups ? groups : "");
  });
}

tvode_status tvode_synth(const char* spec, const char* out_dir) {
  return guarded([&] {
    require(spec, "spec");
    require(out_dir, "out_dir");
    tvode::pipeline::cmd_synth(spec, out_dir);
  });
}

tvode_status tvode_compare_spline(const char* record, const char* lead, const tvode_config* cfg, const char* out_dir,
                                  double* rmse_ode, double* rmse_spline) {
  return guarded([&] {
    require(record, "record");
    require(lead, "lead");
    require(out_dir, "out_dir");
    const auto s = tvode::pipeline::cmd_compare_spline(record, lead, config_or_default(cfg), out_dir);
    if (rmse_ode) *rmse_ode = s.rmse_ode;
    if (rmse_spline) *rmse_spline = s.rmse_spline;
  });
}

tvode_status tvode_fetch(const char* url, const char* sha256, const char* out_path) {
  return guarded([&] {
    require(url, "url");
    require(out_path, "out_path");
    std::optional<std::string> digest;
    if (sha256 && *sha256) digest = sha256;
    tvode::ingest::fetch_file(url, out_path, digest);
  });
}

}  // extern "C"
