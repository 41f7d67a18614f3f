#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ilens {

// Comment lines (leading '#') and a header row, then data rows. Fields never contain commas.
struct CsvTable {
    std::vector<std::string> comments;  // without the leading "# "
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index; throws InputError when absent.
    std::size_t column(std::string_view name) const;
};

// "# induction_lens <schema> v<version> seed=<seed> version=<toolkit>"
std::string schema_comment(std::string_view schema, int schema_version, std::uint64_t seed);

std::string format_number(double v);  // shortest round-trip-safe form, "nan" for NaN
double parse_number(const std::string& s);  // throws CorruptionError

std::string to_csv_text(const CsvTable& table);
CsvTable parse_csv_text(std::string_view text);
// Writes through a temporary file and a rename, so readers never see a partial file.
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

void write_text_atomic(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace ilens
