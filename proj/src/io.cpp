#include "rmm/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "rmm/error.hpp"

namespace rmm::io {

std::string format_decimal(double value) {
    if (!std::isfinite(value)) {
        throw DomainError("format_decimal: non-finite value");
    }
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return {buf.data(), res.ptr};
}

double parse_decimal(std::string_view text) {
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto res = std::from_chars(first, last, value);
    if (text.empty() || res.ec != std::errc{} || res.ptr != last || !std::isfinite(value)) {
        throw ValidationError("not a decimal number: '" + std::string(text) + "'");
    }
    return value;
}

void write_csv(std::ostream& out, const CsvTable& table) {
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        out << (i ? "," : "") << table.header[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << format_decimal(row[i]);
        }
        out << '\n';
    }
}

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    if (!std::getline(in, line) || line.empty()) {
        throw ValidationError("csv: missing header row");
    }
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            table.header.push_back(cell);
        }
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            row.push_back(parse_decimal(cell));
        }
        if (row.size() != table.header.size()) {
            throw ValidationError("csv: row width does not match header");
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace rmm::io
