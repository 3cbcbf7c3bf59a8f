#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"
#include "estimator.hpp"
#include "evaluation.hpp"
#include "ingest.hpp"
#include "report.hpp"

namespace tvode::pipeline {

struct LeadSet {
  std::string name;                // display name used as the report row label
  std::vector<std::string> leads;  // names as they appear in the features
};

// Lead-set selection against the leads present in the features:
//   "table"  twelve singles, "I, II, III combined", "12 leads combined"
//   "auto"   "table" when all twelve standard leads exist, otherwise every
//            available lead singly plus all of them combined
//   "each"   every available lead singly
//   "all12"  the twelve standard leads combined
//   "a,b,c"  one combined set; ';' separates several sets
std::vector<LeadSet> parse_lead_sets(std::string_view selection, std::span<const std::string> available);

std::string lead_display_name(std::string_view lead);

// Rows of every record that carries all leads of `set`, features
// concatenated as (max_b0, max_b1) per lead in set order.
struct LeadSetRows {
  svm::FeatureRows rows;
  std::vector<std::string> labels;
  std::vector<std::string> record_ids;
};
LeadSetRows rows_for_lead_set(std::span<const estimator::FeatureVector> features, const LeadSet& set);

struct Reject {
  std::string record_id;
  std::string reason;
};

struct FeaturizeResult {
  std::vector<estimator::FeatureVector> features;  // manifest order
  std::vector<Reject> rejects;
};

// Loads "<data_dir>/<record_id>" (WFDB, or CSV when "<record_id>.csv"
// exists) for every manifest entry and featurizes the configured leads.
// Values are rounded to the 10 significant digits written to the features
// CSV so an in-process run sees exactly what a file-based run reads back.
FeaturizeResult featurize_manifest(std::span<const ingest::ManifestEntry> manifest,
                                   const std::filesystem::path& data_dir, const PipelineConfig& cfg,
                                   std::size_t workers);

struct EvaluateResult {
  eval::Task task = eval::Task::Binary;
  std::vector<eval::LeadSetResult> rows;
};

// Task defaults to binary for two labels and multiclass for more.
// `subjects` maps record id to subject and is used when
// cfg.cv_group_by_subject is set.
EvaluateResult evaluate_features(std::span<const estimator::FeatureVector> features, const PipelineConfig& cfg,
                                 std::optional<eval::Task> task, std::string_view lead_sets,
                                 const std::map<std::string, std::string>& subjects = {});

// File-level commands. Each writes config_used.txt next to its outputs.
void cmd_featurize(const std::filesystem::path& manifest, const PipelineConfig& cfg,
                   const std::filesystem::path& out_dir, const std::filesystem::path& data_dir = {});
void cmd_evaluate(const std::filesystem::path& features, const PipelineConfig& cfg, std::optional<eval::Task> task,
                  std::string_view lead_sets, const std::filesystem::path& out_dir,
                  const std::filesystem::path& groups = {});
void cmd_synth(const std::filesystem::path& spec, const std::filesystem::path& out_dir);
void cmd_synth_text(std::string_view spec_json, const std::filesystem::path& spec_dir,
                    const std::filesystem::path& out_dir);

struct CompareSummary {
  double rmse_ode = 0.0;
  double rmse_spline = 0.0;
  std::size_t rows = 0;
};
CompareSummary cmd_compare_spline(const std::filesystem::path& record, std::string_view lead,
                                  const PipelineConfig& cfg, const std::filesystem::path& out_dir);

eval::Task parse_task(std::string_view name);

}  // namespace tvode::pipeline
