#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bladerom::csv {

/// Numeric CSV table: one header row of column names, then rows of decimals.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a named column, or -1.
    [[nodiscard]] int find(std::string_view name) const;
    /// Copy of one column.
    [[nodiscard]] std::vector<double> column(std::size_t index) const;
};

/// Reads a numeric CSV file. Throws IoError when the file cannot be opened and
/// SchemaError when a row has the wrong number of fields (naming the first
/// missing or extra column) or a field is not a number.
Table read(const std::filesystem::path& path);

/// Shortest decimal representation that parses back to the identical double.
std::string format_double(double value);

/// Writes a header and rows using format_double. Throws IoError on failure.
void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& rows);

/// Appends `value` to `line` in round-trip format.
void append_double(std::string& line, double value);

} // namespace bladerom::csv
