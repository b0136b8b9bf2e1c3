#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pm::csv {

using Row = std::vector<std::string>;

/// RFC-4180-ish reader: quoted fields, doubled quotes, CRLF, leading UTF-8 BOM.
std::vector<Row> parse(std::string_view text);
std::vector<Row> read_file(const std::string& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& row);

/// Shortest representation that parses back to the identical double.
std::string format_double(double value);
std::optional<double> parse_double(std::string_view text);

std::string trim(std::string_view text);
std::vector<std::string> split_list(std::string_view text, char sep = ',');

void write_text_file(const std::string& path, std::string_view content);
std::string read_text_file(const std::string& path);

}  // namespace pm::csv
