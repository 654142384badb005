#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rfclust::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};

// Parses RFC 4180 style CSV: comma separated, optional double quotes, CRLF
// tolerated, leading UTF-8 BOM stripped. Lines starting with '#' are comments.
Table parse(std::string_view text, std::string_view source_name = "<memory>");
Table read_file(const std::filesystem::path& path);

std::optional<double> parse_double(std::string_view cell);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace rfclust::csv
