#pragma once

#include <span>
#include <string>

#include "evaluation.hpp"

namespace tvode::eval {

struct LeadSetResult {
  std::string name;  // "III", "I, II, III combined", "12 leads combined"
  CvReport report;
};

std::string format_metric(const Metric& m);

// lead_set,train_sensitivity,train_specificity,train_accuracy,test_sensitivity,test_specificity,test_accuracy
std::string binary_report_csv(std::span<const LeadSetResult> rows);
std::string binary_report_text(std::span<const LeadSetResult> rows);

// lead_set,<class...>,accuracy for either the training or the test split.
std::string multiclass_report_csv(std::span<const LeadSetResult> rows, bool test_split);
std::string multiclass_report_text(std::span<const LeadSetResult> rows);

}  // namespace tvode::eval
