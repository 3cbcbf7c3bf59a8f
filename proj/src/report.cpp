#include "report.hpp"

#include <algorithm>

#include "csv.hpp"
#include "error.hpp"

namespace tvode::eval {
namespace {

using Table = std::vector<std::vector<std::string>>;

std::string render(const Table& table, std::size_t header_rows) {
  std::vector<std::size_t> width;
  for (const auto& row : table) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < table.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < table[r].size(); ++c) {
      const auto& cell = table[r][c];
      if (c == 0) {
        line += cell + std::string(width[c] - cell.size(), ' ');
      } else {
        line += "  " + std::string(width[c] - cell.size(), ' ') + cell;
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
    if (r + 1 == header_rows) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
      out += std::string(total, '-') + '\n';
    }
  }
  return out;
}

void require_task(std::span<const LeadSetResult> rows, Task task) {
  for (const auto& r : rows)
    if (r.report.task != task) fail(ErrorCode::InvalidArgument, "report rows mix binary and multiclass results");
}

}  // namespace

std::string format_metric(const Metric& m) { return m ? csv::format10(*m) : "n/a"; }

std::string binary_report_csv(std::span<const LeadSetResult> rows) {
  require_task(rows, Task::Binary);
  std::string out =
      "lead_set,train_sensitivity,train_specificity,train_accuracy,test_sensitivity,test_specificity,test_accuracy\n";
  for (const auto& r : rows) {
    const auto& tr = r.report.mean_train_binary;
    const auto& te = r.report.mean_test_binary;
    out += csv::join({r.name, format_metric(tr.sensitivity), format_metric(tr.specificity), format_metric(tr.accuracy),
                      format_metric(te.sensitivity), format_metric(te.specificity), format_metric(te.accuracy)}) +
           '\n';
  }
  return out;
}

std::string binary_report_text(std::span<const LeadSetResult> rows) {
  require_task(rows, Task::Binary);
  Table t;
  t.push_back({"", "Training", "", "", "Test", "", ""});
  t.push_back({"Lead set", "Sensitivity", "Specificity", "Accuracy", "Sensitivity", "Specificity", "Accuracy"});
  for (const auto& r : rows) {
    const auto& tr = r.report.mean_train_binary;
    const auto& te = r.report.mean_test_binary;
    t.push_back({r.name, format_metric(tr.sensitivity), format_metric(tr.specificity), format_metric(tr.accuracy),
                 format_metric(te.sensitivity), format_metric(te.specificity), format_metric(te.accuracy)});
  }
  std::string head;
  if (!rows.empty())
    head = "positive class: " + rows.front().report.positive + ", folds: " +
           std::to_string(rows.front().report.folds.size()) + "\n\n";
  return head + render(t, 2);
}

std::string multiclass_report_csv(std::span<const LeadSetResult> rows, bool test_split) {
  require_task(rows, Task::Multiclass);
  std::string out;
  if (rows.empty()) return "lead_set,accuracy\n";
  csv::Row header{"lead_set"};
  for (const auto& c : rows.front().report.classes) header.push_back(c);
  header.push_back("accuracy");
  out += csv::join(header) + '\n';
  for (const auto& r : rows) {
    const auto& m = test_split ? r.report.mean_test_multi : r.report.mean_train_multi;
    csv::Row row{r.name};
    for (const auto& s : m.sensitivity) row.push_back(format_metric(s));
    row.push_back(format_metric(m.accuracy));
    out += csv::join(row) + '\n';
  }
  return out;
}

std::string multiclass_report_text(std::span<const LeadSetResult> rows) {
  require_task(rows, Task::Multiclass);
  if (rows.empty()) return {};
  std::string out;
  for (bool test_split : {false, true}) {
    Table t;
    std::vector<std::string> header{"Lead set"};
    for (const auto& c : rows.front().report.classes) header.push_back(c);
    header.push_back("Accuracy");
    t.push_back(header);
    for (const auto& r : rows) {
      const auto& m = test_split ? r.report.mean_test_multi : r.report.mean_train_multi;
      std::vector<std::string> row{r.name};
      for (const auto& s : m.sensitivity) row.push_back(format_metric(s));
      row.push_back(format_metric(m.accuracy));
      t.push_back(row);
    }
    out += test_split ? "\nSensitivity per class, test split\n\n" : "Sensitivity per class, training split\n\n";
    out += render(t, 1);
  }
  return out;
}

}  // namespace tvode::eval
