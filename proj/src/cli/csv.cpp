#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "qal/cli.hpp"

namespace qal::cli {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

namespace {

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string q = "\"";
  for (char c : field) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void write_row(std::ostream& os, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << quote(row[i]);
  os << '\n';
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (in_quotes) throw InvalidArgument("unterminated quote in CSV row");
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

void write_csv(std::ostream& os, const CsvTable& table, const std::string& run_line) {
  for (const auto& m : table.metadata) os << "# " << m << '\n';
  write_row(os, table.header);
  for (const auto& r : table.rows) {
    if (r.size() != table.header.size())
      throw DimensionMismatch("CSV row width differs from the header");
    write_row(os, r);
  }
  if (!run_line.empty()) os << "# run: " << run_line << '\n';
}

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (line.starts_with('#')) {
      std::string body = line.substr(1);
      if (body.starts_with(' ')) body.erase(0, 1);
      t.metadata.push_back(std::move(body));
      continue;
    }
    if (line.empty()) continue;
    auto row = split_row(line);
    if (!have_header) {
      t.header = std::move(row);
      have_header = true;
    } else {
      if (row.size() != t.header.size())
        throw DimensionMismatch("CSV row width differs from the header");
      t.rows.push_back(std::move(row));
    }
  }
  if (!have_header) throw InvalidArgument("CSV has no header row");
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  return read_csv(in);
}

}  // namespace qal::cli
