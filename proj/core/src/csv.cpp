#include "memsim/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>

namespace memsim::csv {

namespace {

// Splits one record; quoted fields may contain commas, doubled quotes and
// newlines, so the stream is consumed as needed.
bool read_record(std::istream& is, std::vector<std::string>& out) {
  out.clear();
  std::string field;
  bool quoted = false;
  bool any = false;
  char ch;
  while (is.get(ch)) {
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (is.peek() == '"') {
          is.get(ch);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      break;
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  if (quoted) throw SchemaError("csv: unterminated quoted field");
  if (!any) return false;
  out.push_back(std::move(field));
  return true;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw SchemaError("csv: missing column " + name);
  return static_cast<std::size_t>(it - header.begin());
}

Table read(std::istream& is) {
  Table t;
  std::vector<std::string> rec;
  if (!read_record(is, rec)) throw SchemaError("csv: empty input");
  for (auto& h : rec) t.header.push_back(trim(h));
  while (read_record(is, rec)) {
    if (rec.size() == 1 && trim(rec[0]).empty()) continue;
    if (rec.size() != t.header.size()) {
      throw SchemaError("csv: row " + std::to_string(t.rows.size() + 1) +
                        " has " + std::to_string(rec.size()) + " fields, expected " +
                        std::to_string(t.header.size()));
    }
    t.rows.push_back(rec);
  }
  return t;
}

std::vector<std::vector<double>> read_numeric(std::istream& is,
                                              const std::vector<std::string>& columns) {
  const Table t = read(is);
  if (t.header != columns) {
    std::string expected;
    for (const auto& c : columns) expected += (expected.empty() ? "" : ",") + c;
    throw SchemaError("csv: expected header " + expected);
  }
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::vector<double> values;
    for (const auto& raw : t.rows[r]) {
      const std::string f = trim(raw);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
        throw SchemaError("csv: row " + std::to_string(r + 1) + ": '" + f +
                          "' is not a number");
      }
      values.push_back(v);
    }
    out.push_back(std::move(values));
  }
  return out;
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << quote(fields[i]);
  }
  os << '\n';
}

void write_row(std::ostream& os, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ',';
    os << number(values[i]);
  }
  os << '\n';
}

}  // namespace memsim::csv
