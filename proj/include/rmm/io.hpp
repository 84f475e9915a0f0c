#pragma once

// Decimal-string and CSV helpers shared by every exporter. Reals are written
// in the shortest form that parses back to the identical double, with '.' as
// the decimal point regardless of locale.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rmm::io {

[[nodiscard]] std::string format_decimal(double value);

/// Throws ValidationError unless the whole string is a finite decimal number.
[[nodiscard]] double parse_decimal(std::string_view text);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Header row first, then one line per row; numbers via format_decimal.
void write_csv(std::ostream& out, const CsvTable& table);

/// Reads what write_csv wrote. The header row is mandatory.
[[nodiscard]] CsvTable read_csv(std::istream& in);

}  // namespace rmm::io
