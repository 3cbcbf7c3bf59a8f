#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tvode::ingest {

struct LeadSignal {
  std::string name;
  std::vector<double> samples;  // mV
  double gain = 1.0;            // ADU per mV
  int baseline = 0;             // ADU
};

// Multi-lead waveform with validated shape. Immutable once built.
class SignalRecord {
 public:
  SignalRecord(std::string record_id, std::string label, double fs, std::vector<LeadSignal> leads);

  const std::string& record_id() const noexcept { return record_id_; }
  const std::string& label() const noexcept { return label_; }
  double fs() const noexcept { return fs_; }
  const std::vector<LeadSignal>& leads() const noexcept { return leads_; }
  std::size_t duration_samples() const noexcept { return duration_samples_; }

  // Case-insensitive lookup; nullptr when absent.
  const LeadSignal* find_lead(std::string_view name) const noexcept;

  SignalRecord with_label(std::string label) const;

 private:
  std::string record_id_;
  std::string label_;
  double fs_;
  std::vector<LeadSignal> leads_;
  std::size_t duration_samples_;
};

bool lead_name_equal(std::string_view a, std::string_view b) noexcept;

struct SignalSpec {
  std::string file;
  int format = 16;
  double gain = 0.0;
  int baseline = 0;
  std::string units = "mV";
  std::string name;
};

struct RecordHeader {
  std::string record_id;
  std::size_t n_signals = 0;
  double fs = 0.0;
  std::size_t n_samples = 0;
  std::vector<SignalSpec> signals;
};

RecordHeader parse_header(std::string_view text);

SignalRecord parse_signals(std::span<const std::uint8_t> bytes, const RecordHeader& header,
                           std::string label = {});

// Header-row CSV, one sample per row, amplitudes already in mV.
SignalRecord parse_csv(std::string_view text, double fs, std::string label,
                       std::string record_id = "csv");
std::string emit_csv(const SignalRecord& record);

struct WfdbFiles {
  std::string header_text;
  std::vector<std::uint8_t> dat_bytes;
};

// Quantizes each lead with its own gain/baseline into format 16.
WfdbFiles encode_wfdb(const SignalRecord& record);
void write_wfdb(const SignalRecord& record, const std::filesystem::path& dir);

// Loads "<base>.hea" (+ its .dat) or a ".csv" file. csv_fs is only used
// for CSV input.
SignalRecord load_record(const std::filesystem::path& path, std::string label = {},
                         double csv_fs = 1000.0);

struct ManifestEntry {
  std::string record_id;
  std::string label;
  std::string subject;  // empty when the manifest has no subject column
};

std::vector<ManifestEntry> parse_manifest(std::string_view text);
std::string emit_manifest(const std::vector<ManifestEntry>& entries);

// Downloads a single http(s) resource. When expected_sha256 is given the
// payload is verified and dest removed on mismatch.
std::filesystem::path fetch_file(const std::string& url, const std::filesystem::path& dest,
                                 const std::optional<std::string>& expected_sha256 = std::nullopt);

std::string sha256_hex(std::span<const std::uint8_t> data);

}  // namespace tvode::ingest
