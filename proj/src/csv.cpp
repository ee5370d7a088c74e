#include "grate/csv.hpp"

#include <cmath>
#include <iomanip>
#include <locale>
#include <sstream>

#include "grate/error.hpp"

namespace grate {

std::string format_number(double value) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(kOutputDigits) << value;
  return os.str();
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<double> read_indexed_column(std::istream& in, const std::string& expected_header,
                                        std::size_t n) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != expected_header) {
    throw Error(ErrorKind::Parse, "expected CSV header '" + expected_header + "'");
  }
  std::vector<double> values(n, 0.0);
  std::vector<char> seen(n, 0);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected two fields");
    }
    std::size_t idx = 0;
    double v = 0.0;
    try {
      std::size_t used = 0;
      const std::string a = trim(line.substr(0, comma));
      const std::string b = trim(line.substr(comma + 1));
      long long raw = std::stoll(a, &used);
      if (used != a.size() || raw < 0) throw std::invalid_argument(a);
      idx = static_cast<std::size_t>(raw);
      v = std::stod(b, &used);
      if (used != b.size() || !std::isfinite(v)) throw std::invalid_argument(b);
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": malformed row '" +
                                        line + "'");
    }
    if (idx >= n) {
      throw Error(ErrorKind::Validation, "line " + std::to_string(line_no) + ": index " +
                                             std::to_string(idx) + " outside graph of size " +
                                             std::to_string(n));
    }
    if (seen[idx]) {
      throw Error(ErrorKind::Validation, "line " + std::to_string(line_no) + ": duplicate index " +
                                             std::to_string(idx));
    }
    seen[idx] = 1;
    values[idx] = v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) {
      throw Error(ErrorKind::Validation, "missing value for vertex " + std::to_string(i));
    }
  }
  return values;
}

}  // namespace grate
