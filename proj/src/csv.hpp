#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tvode::csv {

using Row = std::vector<std::string>;

// RFC-4180 style reader: quoted fields, doubled quotes, CRLF or LF line
// endings. Blank lines are skipped.
std::vector<Row> parse(std::string_view text);

// Quotes a field only when it contains a delimiter, quote or newline.
std::string escape(std::string_view field);

std::string join(const Row& fields);

// Parses a full cell as a finite double; surrounding blanks allowed.
bool parse_double(std::string_view cell, double& out);

// Fixed-precision formatting used by every emitted CSV (10 significant
// digits) and the lossless variant used for round-trippable data files.
std::string format10(double value);
std::string format_exact(double value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace tvode::csv
