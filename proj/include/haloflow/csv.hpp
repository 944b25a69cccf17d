// Minimal CSV helpers: fixed dialect (comma, '.' decimal, header row, LF),
// floats rendered with 17 significant digits so output round-trips exactly.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace haloflow::csv {

/// "%.17g" rendering; identical bits give identical text.
std::string num(double v);
std::string num(std::int64_t v);
std::string num(std::uint64_t v);
std::string num(std::uint32_t v);
std::string num(int v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position by header name; ValidationError if absent.
  std::size_t column(std::string_view name) const;
};

/// Parses a header-first CSV stream. Blank lines are skipped; quoting is not supported.
Table read(std::istream& is);
Table read_file(const std::string& path);

std::vector<std::string> split_line(std::string_view line);

double to_double(const std::string& s, std::string_view what);
std::int64_t to_int(const std::string& s, std::string_view what);

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  void row(const std::vector<std::string>& cells);

 private:
  std::ostream& os_;
};

}  // namespace haloflow::csv
