#include "ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "csv.hpp"
#include "error.hpp"

namespace tvode::ingest {
namespace {

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> tokens;
  std::istringstream ss{std::string(line)};
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  return tokens;
}

bool parse_size(const std::string& s, std::size_t& out) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
    return false;
  try {
    out = static_cast<std::size_t>(std::stoull(s));
  } catch (...) {
    return false;
  }
  return true;
}

bool parse_int(const std::string& s, int& out) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size() || v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
      return false;
    out = static_cast<int>(v);
  } catch (...) {
    return false;
  }
  return true;
}

// "2000", "2000(0)", "2000/mV", "2000(-12)/mV"
void parse_gain_token(const std::string& token, SignalSpec& sig, bool& has_baseline) {
  std::string gain_part = token;
  std::string units;
  if (auto slash = gain_part.find('/'); slash != std::string::npos) {
    units = gain_part.substr(slash + 1);
    gain_part = gain_part.substr(0, slash);
  }
  has_baseline = false;
  if (auto open = gain_part.find('('); open != std::string::npos) {
    const auto close = gain_part.find(')', open);
    if (close == std::string::npos || close != gain_part.size() - 1)
      fail(ErrorCode::MalformedHeader, "bad gain token '" + token + "'");
    if (!parse_int(gain_part.substr(open + 1, close - open - 1), sig.baseline))
      fail(ErrorCode::MalformedHeader, "bad baseline in '" + token + "'");
    has_baseline = true;
    gain_part = gain_part.substr(0, open);
  }
  double gain = 0.0;
  if (!csv::parse_double(gain_part, gain) || gain < 0.0)
    fail(ErrorCode::MalformedHeader, "bad gain in '" + token + "'");
  // WFDB convention: a zero gain means "uncalibrated, assume 200".
  sig.gain = gain == 0.0 ? 200.0 : gain;
  if (!units.empty()) sig.units = units;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

bool lead_name_equal(std::string_view a, std::string_view b) noexcept {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

SignalRecord::SignalRecord(std::string record_id, std::string label, double fs,
                           std::vector<LeadSignal> leads)
    : record_id_(std::move(record_id)),
      label_(std::move(label)),
      fs_(fs),
      leads_(std::move(leads)),
      duration_samples_(leads_.empty() ? 0 : leads_.front().samples.size()) {
  if (!(fs_ > 0.0) || !std::isfinite(fs_))
    fail(ErrorCode::InvalidRecord, record_id_ + ": sampling rate must be positive");
  if (leads_.empty()) fail(ErrorCode::InvalidRecord, record_id_ + ": record has no leads");
  if (duration_samples_ < 2)
    fail(ErrorCode::InvalidRecord, record_id_ + ": record needs at least 2 samples");
  for (std::size_t k = 0; k < leads_.size(); ++k) {
    const auto& lead = leads_[k];
    if (lead.samples.size() != duration_samples_)
      fail(ErrorCode::InvalidRecord, record_id_ + ": lead '" + lead.name + "' has a different length");
    if (!(lead.gain > 0.0))
      fail(ErrorCode::InvalidRecord, record_id_ + ": lead '" + lead.name + "' has non-positive gain");
    if (!std::all_of(lead.samples.begin(), lead.samples.end(), [](double v) { return std::isfinite(v); }))
      fail(ErrorCode::InvalidRecord, record_id_ + ": lead '" + lead.name + "' has non-finite samples");
    for (std::size_t j = 0; j < k; ++j)
      if (lead_name_equal(leads_[j].name, lead.name))
        fail(ErrorCode::InvalidRecord, record_id_ + ": duplicate lead name '" + lead.name + "'");
  }
}

const LeadSignal* SignalRecord::find_lead(std::string_view name) const noexcept {
  for (const auto& lead : leads_)
    if (lead_name_equal(lead.name, name)) return &lead;
  return nullptr;
}

SignalRecord SignalRecord::with_label(std::string label) const {
  SignalRecord copy = *this;
  copy.label_ = std::move(label);
  return copy;
}

RecordHeader parse_header(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto tokens = split_ws(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    lines.push_back(std::move(tokens));
  }
  if (lines.empty()) fail(ErrorCode::MalformedHeader, "empty header");

  const auto& rec = lines.front();
  if (rec.size() < 4) fail(ErrorCode::MalformedHeader, "record line needs 'RECORD NSIG FS NSAMP'");
  RecordHeader header;
  header.record_id = rec[0];
  if (auto slash = header.record_id.find('/'); slash != std::string::npos)
    fail(ErrorCode::UnsupportedFormat, "multi-segment records are not supported");
  if (!parse_size(rec[1], header.n_signals) || header.n_signals == 0)
    fail(ErrorCode::MalformedHeader, "bad signal count '" + rec[1] + "'");
  // FS may carry a counter frequency ("1000/1"); only the leading number matters.
  const std::string fs_token = rec[2].substr(0, rec[2].find('/'));
  if (!csv::parse_double(fs_token, header.fs) || !(header.fs > 0.0))
    fail(ErrorCode::MalformedHeader, "bad sampling frequency '" + rec[2] + "'");
  if (!parse_size(rec[3], header.n_samples))
    fail(ErrorCode::MalformedHeader, "bad sample count '" + rec[3] + "'");

  if (lines.size() < header.n_signals + 1)
    fail(ErrorCode::MalformedHeader, "header declares " + rec[1] + " signals but has " +
                                         std::to_string(lines.size() - 1) + " signal lines");
  for (std::size_t k = 0; k < header.n_signals; ++k) {
    const auto& t = lines[k + 1];
    if (t.size() < 3) fail(ErrorCode::MalformedHeader, "signal line " + std::to_string(k + 1) + " too short");
    SignalSpec sig;
    sig.file = t[0];
    // Format may carry skew/offset suffixes ("16x1", "16:3", "16+24").
    const std::string fmt = t[1].substr(0, t[1].find_first_of("x:+"));
    if (!parse_int(fmt, sig.format))
      fail(ErrorCode::MalformedHeader, "bad format code '" + t[1] + "'");
    if (sig.format != 16 || fmt != t[1])
      fail(ErrorCode::UnsupportedFormat, "format '" + t[1] + "' is not supported (only 16)");
    bool has_baseline = false;
    parse_gain_token(t[2], sig, has_baseline);
    if (!has_baseline && t.size() > 4 && !parse_int(t[4], sig.baseline))
      fail(ErrorCode::MalformedHeader, "bad ADC zero '" + t[4] + "'");
    sig.name = t.size() >= 4 ? t.back() : "sig" + std::to_string(k);
    header.signals.push_back(std::move(sig));
  }
  for (const auto& s : header.signals)
    if (s.file != header.signals.front().file)
      fail(ErrorCode::UnsupportedFormat, "signals split across several .dat files");
  return header;
}

SignalRecord parse_signals(std::span<const std::uint8_t> bytes, const RecordHeader& header,
                           std::string label) {
  for (const auto& s : header.signals)
    if (s.format != 16) fail(ErrorCode::UnsupportedFormat, "only format 16 can be decoded");
  const std::size_t nsig = header.signals.size();
  if (nsig == 0 || nsig != header.n_signals)
    fail(ErrorCode::MalformedHeader, "header signal table is inconsistent");
  const std::size_t expected = 2 * nsig * header.n_samples;
  if (bytes.size() != expected)
    fail(ErrorCode::TruncatedData, "expected " + std::to_string(expected) + " bytes, got " +
                                       std::to_string(bytes.size()));

  std::vector<LeadSignal> leads(nsig);
  for (std::size_t k = 0; k < nsig; ++k) {
    leads[k].name = header.signals[k].name;
    leads[k].gain = header.signals[k].gain;
    leads[k].baseline = header.signals[k].baseline;
    leads[k].samples.resize(header.n_samples);
  }
  for (std::size_t s = 0; s < header.n_samples; ++s) {
    for (std::size_t k = 0; k < nsig; ++k) {
      const std::size_t off = 2 * (s * nsig + k);
      const auto raw = static_cast<std::int16_t>(
          static_cast<std::uint16_t>(bytes[off]) | (static_cast<std::uint16_t>(bytes[off + 1]) << 8));
      if (raw == std::numeric_limits<std::int16_t>::min())
        fail(ErrorCode::InvalidRecord, header.record_id + ": missing sample in lead '" + leads[k].name +
                                           "' at index " + std::to_string(s));
      leads[k].samples[s] = (static_cast<double>(raw) - leads[k].baseline) / leads[k].gain;
    }
  }
  return SignalRecord(header.record_id, std::move(label), header.fs, std::move(leads));
}

SignalRecord parse_csv(std::string_view text, double fs, std::string label, std::string record_id) {
  const auto rows = csv::parse(text);
  if (rows.empty()) fail(ErrorCode::InvalidRecord, record_id + ": empty CSV");
  const auto& names = rows.front();
  std::vector<LeadSignal> leads(names.size());
  for (std::size_t k = 0; k < names.size(); ++k) {
    leads[k].name = names[k];
    leads[k].samples.reserve(rows.size() - 1);
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != names.size())
      fail(ErrorCode::RaggedRows, record_id + ": row " + std::to_string(r + 1) + " has " +
                                      std::to_string(rows[r].size()) + " cells, expected " +
                                      std::to_string(names.size()));
    for (std::size_t k = 0; k < names.size(); ++k) {
      double v = 0.0;
      if (!csv::parse_double(rows[r][k], v))
        fail(ErrorCode::NonNumericCell, record_id + ": non-numeric cell '" + rows[r][k] + "' at row " +
                                            std::to_string(r + 1));
      leads[k].samples.push_back(v);
    }
  }
  return SignalRecord(std::move(record_id), std::move(label), fs, std::move(leads));
}

std::string emit_csv(const SignalRecord& record) {
  std::string out;
  csv::Row names;
  for (const auto& lead : record.leads()) names.push_back(lead.name);
  out += csv::join(names) + "\n";
  for (std::size_t s = 0; s < record.duration_samples(); ++s) {
    for (std::size_t k = 0; k < record.leads().size(); ++k) {
      if (k) out += ',';
      out += csv::format_exact(record.leads()[k].samples[s]);
    }
    out += '\n';
  }
  return out;
}

WfdbFiles encode_wfdb(const SignalRecord& record) {
  const auto& leads = record.leads();
  const std::size_t nsig = leads.size();
  const std::size_t n = record.duration_samples();
  WfdbFiles files;
  files.dat_bytes.resize(2 * nsig * n);
  std::vector<int> checksum(nsig, 0), first(nsig, 0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t k = 0; k < nsig; ++k) {
      const double scaled = std::round(leads[k].samples[s] * leads[k].gain) + leads[k].baseline;
      if (!(scaled > std::numeric_limits<std::int16_t>::min() &&
            scaled <= std::numeric_limits<std::int16_t>::max()))
        fail(ErrorCode::SampleOverflow, record.record_id() + ": lead '" + leads[k].name +
                                            "' exceeds the 16-bit range at sample " + std::to_string(s));
      const auto raw = static_cast<std::int16_t>(scaled);
      if (s == 0) first[k] = raw;
      checksum[k] = (checksum[k] + raw) & 0xffff;
      const auto u = static_cast<std::uint16_t>(raw);
      const std::size_t off = 2 * (s * nsig + k);
      files.dat_bytes[off] = static_cast<std::uint8_t>(u & 0xff);
      files.dat_bytes[off + 1] = static_cast<std::uint8_t>(u >> 8);
    }
  }
  std::ostringstream hea;
  hea << record.record_id() << ' ' << nsig << ' ' << csv::format10(record.fs()) << ' ' << n << '\n';
  for (std::size_t k = 0; k < nsig; ++k) {
    const int cks = static_cast<std::int16_t>(static_cast<std::uint16_t>(checksum[k]));
    hea << record.record_id() << ".dat 16 " << csv::format_exact(leads[k].gain) << '(' << leads[k].baseline
        << ")/mV 16 0 " << first[k] << ' ' << cks << " 0 " << leads[k].name << '\n';
  }
  files.header_text = hea.str();
  return files;
}

void write_wfdb(const SignalRecord& record, const std::filesystem::path& dir) {
  const auto files = encode_wfdb(record);
  csv::write_file(dir / (record.record_id() + ".hea"), files.header_text);
  csv::write_file(dir / (record.record_id() + ".dat"),
                  std::string_view(reinterpret_cast<const char*>(files.dat_bytes.data()), files.dat_bytes.size()));
}

SignalRecord load_record(const std::filesystem::path& path, std::string label, double csv_fs) {
  namespace fs = std::filesystem;
  if (lower(path.extension().string()) == ".csv") {
    return parse_csv(csv::read_file(path), csv_fs, std::move(label), path.stem().string());
  }
  fs::path hea = path;
  if (lower(path.extension().string()) != ".hea") hea += ".hea";
  const auto header = parse_header(csv::read_file(hea));
  const auto dat_text = csv::read_file(hea.parent_path() / header.signals.front().file);
  const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(dat_text.data()),
                                            dat_text.size());
  return parse_signals(bytes, header, std::move(label));
}

std::vector<ManifestEntry> parse_manifest(std::string_view text) {
  std::vector<ManifestEntry> entries;
  const auto rows = csv::parse(text);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (r == 0 && !row.empty() && row[0] == "record_id") continue;
    if (row.size() < 2 || row.size() > 3)
      fail(ErrorCode::RaggedRows, "manifest row " + std::to_string(r + 1) + " must be record_id,label[,subject]");
    if (row[0].empty()) fail(ErrorCode::InvalidArgument, "manifest row " + std::to_string(r + 1) + " has no record id");
    entries.push_back({row[0], row[1], row.size() == 3 ? row[2] : std::string{}});
  }
  return entries;
}

std::string emit_manifest(const std::vector<ManifestEntry>& entries) {
  const bool with_subject =
      std::any_of(entries.begin(), entries.end(), [](const auto& e) { return !e.subject.empty(); });
  std::string out = with_subject ? "record_id,label,subject\n" : "record_id,label\n";
  for (const auto& e : entries) {
    csv::Row row{e.record_id, e.label};
    if (with_subject) row.push_back(e.subject);
    out += csv::join(row) + "\n";
  }
  return out;
}

}  // namespace tvode::ingest
