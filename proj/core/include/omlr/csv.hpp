#pragma once

#include "omlr/linalg.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace omlr {

/// {prefix_1, ..., prefix_d}
std::vector<std::string> vector_columns(std::string_view prefix, Eigen::Index d);

namespace detail {
inline void append_columns(std::vector<std::string>& out, std::string_view s) { out.emplace_back(s); }
inline void append_columns(std::vector<std::string>& out, const std::vector<std::string>& v) {
  out.insert(out.end(), v.begin(), v.end());
}
}  // namespace detail

/// Flattens a mix of single names and name lists into one header.
template <class... Parts>
std::vector<std::string> columns(const Parts&... parts) {
  std::vector<std::string> out;
  (detail::append_columns(out, parts), ...);
  return out;
}

/// Shortest round-trip decimal form (std::to_chars); byte-stable for a given value.
std::string format_double(double x);

/// Minimal comma-separated writer. Doubles are written in shortest round-trip
/// form so identical values always produce identical bytes.
class CsvWriter {
 public:
  class Row {
   public:
    Row& value(double x);
    Row& values(const Vec& v);
    Row& integer(std::int64_t x);
    void end();

   private:
    friend class CsvWriter;
    explicit Row(std::ostream& os) : os_(os) {}
    void sep();
    std::ostream& os_;
    bool first_ = true;
  };

  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(const std::vector<std::string>& cols);
  Row row() { return Row(os_); }

 private:
  std::ostream& os_;
};

/// Splits on commas; no quoting support (all columns are numeric).
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace omlr
