#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace grate {

/// Digits used for every floating-point value written to files or stdout.
inline constexpr int kOutputDigits = 12;

/// Formats with kOutputDigits significant digits, '.' decimal separator.
std::string format_number(double value);

/// Writes values separated by commas and ends the line.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Reads a two-column numeric CSV with the given header ("i,y", "i,f").
/// Rows may appear in any order; every index 0..n-1 must be present exactly
/// once. Throws Parse on malformed rows and Validation on missing indices.
std::vector<double> read_indexed_column(std::istream& in, const std::string& expected_header,
                                        std::size_t n);

}  // namespace grate
