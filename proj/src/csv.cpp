#include "bladerom/csv.hpp"

#include "bladerom/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bladerom::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

double parse_number(std::string_view field, const std::filesystem::path& path, std::size_t row,
                    const std::string& column) {
    if (field == "nan" || field == "NaN") return std::nan("");
    if (field == "inf") return std::numeric_limits<double>::infinity();
    if (field == "-inf") return -std::numeric_limits<double>::infinity();
    double value = 0.0;
    const char* first = field.data();
    if (!field.empty() && field.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw SchemaError(path.string() + ": row " + std::to_string(row) + ", column '" + column +
                          "': not a number: '" + std::string(field) + "'");
    }
    return value;
}

} // namespace

int Table::find(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

std::vector<double> Table::column(std::size_t index) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[index]);
    return out;
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    Table table;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool have_header = false;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split(line);
        if (!have_header) {
            for (auto f : fields) table.header.emplace_back(f);
            have_header = true;
            continue;
        }
        const std::size_t row = table.rows.size();
        if (fields.size() < table.header.size()) {
            throw SchemaError(path.string() + ": row " + std::to_string(row) + " is missing column '" +
                              table.header[fields.size()] + "'");
        }
        if (fields.size() > table.header.size()) {
            throw SchemaError(path.string() + ": row " + std::to_string(row) + " has " +
                              std::to_string(fields.size() - table.header.size()) +
                              " field(s) beyond the last column '" + table.header.back() + "'");
        }
        std::vector<double> values(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            values[i] = parse_number(fields[i], path, row, table.header[i]);
        }
        table.rows.push_back(std::move(values));
    }
    if (!have_header) throw SchemaError(path.string() + ": empty file, header expected");
    return table;
}

std::string format_double(double value) {
    std::string s;
    append_double(s, value);
    return s;
}

void append_double(std::string& line, double value) {
    if (std::isnan(value)) {
        line += "nan";
        return;
    }
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    line.append(buf.data(), ptr);
}

void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path.string());
    std::string line;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) line += ',';
        line += header[i];
    }
    line += '\n';
    out << line;
    for (const auto& row : rows) {
        line.clear();
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) line += ',';
            append_double(line, row[i]);
        }
        line += '\n';
        out << line;
    }
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace bladerom::csv
