#pragma once

// Minimal RFC-4180 style CSV reading and writing with '.' decimals.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace memsim::csv {

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

Table read(std::istream& is);

/// Parses every row as doubles, requiring exactly `columns` in that order.
std::vector<std::vector<double>> read_numeric(std::istream& is,
                                              const std::vector<std::string>& columns);

std::string quote(const std::string& field);
std::string number(double v);

void write_row(std::ostream& os, const std::vector<std::string>& fields);
void write_row(std::ostream& os, const std::vector<double>& values);

}  // namespace memsim::csv
