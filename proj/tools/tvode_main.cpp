// Command-line front end over the tvode C API.
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tvode/tvode.h"

namespace {

int report(tvode_status status, const std::string& message) {
  std::string line = message;
  for (auto& c : line)
    if (c == '\n' || c == '\r') c = ' ';
  std::fprintf(stderr, "error=%s message=%s\n", tvode_status_name(status), line.c_str());
  return static_cast<int>(status);
}

int check(tvode_status status) { return status == TVODE_OK ? 0 : report(status, tvode_last_error()); }

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.path, "key=value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", args.overrides, "override one configuration key (key=value), repeatable");
}

// Builds the configuration; on failure prints the error and returns its status.
int make_config(const ConfigArgs& args, tvode_config** cfg) {
  const tvode_status st = args.path.empty() ? tvode_config_new(cfg) : tvode_config_load(args.path.c_str(), cfg);
  if (st != TVODE_OK) return check(st);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      tvode_config_free(*cfg);
      *cfg = nullptr;
      return report(TVODE_INVALID_CONFIG, "--set expects key=value, got '" + kv + "'");
    }
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (const auto s = tvode_config_set(*cfg, key.c_str(), value.c_str()); s != TVODE_OK) {
      tvode_config_free(*cfg);
      *cfg = nullptr;
      return check(s);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-varying coefficient ODE features and SVM classification for multi-lead ECG"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tvode_version());

  ConfigArgs feat_cfg;
  std::string feat_manifest, feat_out, feat_data;
  int feat_workers = 0;
  auto* featurize = app.add_subcommand("featurize", "smooth, fit coefficient tracks and write max-coefficient features");
  featurize->add_option("--manifest", feat_manifest, "record_id,label[,subject] CSV")->required()->check(CLI::ExistingFile);
  featurize->add_option("--out", feat_out, "output directory")->required();
  featurize->add_option("--data-dir", feat_data, "record directory (default: the manifest's directory)");
  featurize->add_option("--workers", feat_workers, "worker threads (overrides TVODE_WORKERS)")->check(CLI::PositiveNumber);
  add_config_options(featurize, feat_cfg);

  ConfigArgs eval_cfg;
  std::string eval_features, eval_task, eval_leads, eval_out, eval_groups;
  auto* evaluate = app.add_subcommand("evaluate", "stratified k-fold SVM evaluation per lead set");
  evaluate->add_option("--features", eval_features, "features CSV from featurize")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--task", eval_task, "binary or multiclass (default: by label count)")
      ->check(CLI::IsMember({"binary", "multiclass"}));
  evaluate->add_option("--leads", eval_leads, "lead sets: auto, table, each, all12, or a,b,c[;d,e]");
  evaluate->add_option("--out", eval_out, "output directory")->required();
  evaluate->add_option("--groups", eval_groups, "record_id,subject CSV for subject-level folds")->check(CLI::ExistingFile);
  add_config_options(evaluate, eval_cfg);

  std::string synth_spec, synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic WFDB corpus from ODE coefficient tracks");
  synth->add_option("--spec", synth_spec, "JSON corpus specification")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "output directory")->required();

  ConfigArgs cmp_cfg;
  std::string cmp_record, cmp_lead, cmp_out;
  auto* compare = app.add_subcommand("compare-spline", "ODE reconstruction against cubic spline smoothing");
  compare->add_option("--record", cmp_record, "WFDB record base path, .hea or .csv file")->required();
  compare->add_option("--lead", cmp_lead, "lead name")->required();
  compare->add_option("--out", cmp_out, "output directory")->required();
  add_config_options(compare, cmp_cfg);

  std::string fetch_url, fetch_sha, fetch_out;
  auto* fetch = app.add_subcommand("fetch", "download one file, optionally verifying its SHA-256");
  fetch->add_option("--url", fetch_url, "http(s) URL")->required();
  fetch->add_option("--sha256", fetch_sha, "expected hex digest");
  fetch->add_option("--out", fetch_out, "destination path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report(TVODE_INVALID_ARGUMENT, e.what());
  }

  if (*featurize) {
    if (feat_workers > 0) setenv("TVODE_WORKERS", std::to_string(feat_workers).c_str(), 1);
    tvode_config* cfg = nullptr;
    if (const int rc = make_config(feat_cfg, &cfg)) return rc;
    const auto st = tvode_featurize(feat_manifest.c_str(), cfg, feat_out.c_str(),
                                    feat_data.empty() ? nullptr : feat_data.c_str());
    tvode_config_free(cfg);
    return check(st);
  }
  if (*evaluate) {
    tvode_config* cfg = nullptr;
    if (const int rc = make_config(eval_cfg, &cfg)) return rc;
    const auto st = tvode_evaluate(eval_features.c_str(), cfg, eval_task.empty() ? nullptr : eval_task.c_str(),
                                   eval_leads.empty() ? nullptr : eval_leads.c_str(), eval_out.c_str(),
                                   eval_groups.empty() ? nullptr : eval_groups.c_str());
    tvode_config_free(cfg);
    return check(st);
  }
  if (*synth) return check(tvode_synth(synth_spec.c_str(), synth_out.c_str()));
  if (*compare) {
    tvode_config* cfg = nullptr;
    if (const int rc = make_config(cmp_cfg, &cfg)) return rc;
    double rmse_ode = 0.0, rmse_spline = 0.0;
    const auto st = tvode_compare_spline(cmp_record.c_str(), cmp_lead.c_str(), cfg, cmp_out.c_str(), &rmse_ode,
                                         &rmse_spline);
    tvode_config_free(cfg);
    if (st == TVODE_OK) std::printf("rmse_ode=%.10g,rmse_spline=%.10g\n", rmse_ode, rmse_spline);
    return check(st);
  }
  if (*fetch)
    return check(tvode_fetch(fetch_url.c_str(), fetch_sha.empty() ? nullptr : fetch_sha.c_str(), fetch_out.c_str()));
  return report(TVODE_INVALID_ARGUMENT, "no subcommand given");
}
