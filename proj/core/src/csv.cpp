#include "omlr/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <ostream>

namespace omlr {

std::vector<std::string> vector_columns(std::string_view prefix, Eigen::Index d) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index i = 1; i <= d; ++i) out.push_back(std::string(prefix) + "_" + std::to_string(i));
  return out;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

void CsvWriter::header(const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) os_ << ',';
    os_ << cols[i];
  }
  os_ << '\n';
}

void CsvWriter::Row::sep() {
  if (!first_) os_ << ',';
  first_ = false;
}

CsvWriter::Row& CsvWriter::Row::value(double x) {
  sep();
  os_ << format_double(x);
  return *this;
}

CsvWriter::Row& CsvWriter::Row::values(const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) value(v[i]);
  return *this;
}

CsvWriter::Row& CsvWriter::Row::integer(std::int64_t x) {
  sep();
  os_ << x;
  return *this;
}

void CsvWriter::Row::end() { os_ << '\n'; }

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace omlr
