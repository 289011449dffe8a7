#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hifloc::text {

/// Shortest representation that round-trips to the same double.
std::string format_double(double value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> split(std::string_view line, char delimiter);

double parse_double(std::string_view field);

/// Header plus data rows; blank lines are skipped.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view content);

} // namespace hifloc::text
