#include "spdc/io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "spdc/errors.hpp"

namespace spdc::io {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

double parse_number(const std::string& field, const std::string& context) {
  const std::string f = trim(field);
  if (f == "nan") return NAN;
  if (f == "inf") return INFINITY;
  if (f == "-inf") return -INFINITY;
  double v = 0.0;
  const char* begin = f.data();
  const char* end = f.data() + f.size();
  if (!f.empty() && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, v);
  if (f.empty() || res.ec != std::errc() || res.ptr != end) {
    throw DataError(context + ": '" + field + "' is not a number");
  }
  return v;
}

long parse_integer(const std::string& field, const std::string& context) {
  const std::string f = trim(field);
  long v = 0;
  const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size()) {
    throw DataError(context + ": '" + field + "' is not an integer");
  }
  return v;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(path), columns_(header.size()) {
  if (!out_) throw DataError("cannot open '" + path + "' for writing");
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) throw DataError("CsvWriter: wrong field count for '" + path_ + "'");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
  if (!out_) throw DataError("write failed for '" + path_ + "'");
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw DataError("close failed for '" + path_ + "'");
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError("CSV is missing column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line[0] == '#') {
      table.comments.push_back(trim(line.substr(1)));
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw DataError("'" + path + "' is empty");
  return table;
}

void prepend_comment(const std::string& path, const std::string& comment) {
  std::string body;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    body = ss.str();
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << "# " << comment << '\n' << body;
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace spdc::io
