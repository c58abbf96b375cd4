#pragma once

// Locale-independent CSV helpers shared by the trace, sample and report
// writers. Numbers round-trip exactly (17 significant digits).

#include <fstream>
#include <string>
#include <vector>

namespace spdc::io {

std::string format_number(double v);
/// Parses a full-field decimal number; throws DataError naming `context`.
double parse_number(const std::string& field, const std::string& context);
long parse_integer(const std::string& field, const std::string& context);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // source line of each row
  std::vector<std::string> comments;      // '#' lines, without the marker

  /// Index of a named column; throws DataError if absent.
  std::size_t column(const std::string& name) const;
};

/// Reads a comma-separated file with a header line. Blank and '#' lines are skipped;
/// rows with the wrong field count raise DataError with the line number.
CsvTable read_csv(const std::string& path);

/// Inserts "# comment" as the first line of an existing file.
void prepend_comment(const std::string& path, const std::string& comment);

}  // namespace spdc::io
