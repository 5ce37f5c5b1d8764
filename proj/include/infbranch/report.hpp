#pragma once

// Machine-readable output: CSV tables for data series and a JSON envelope
// with the run's metadata.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace infbranch {

/// Numeric table with a header row. Integers are stored as doubles.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index by name; throws std::out_of_range if absent.
  std::size_t column(std::string_view name) const;
  std::vector<double> column_values(std::string_view name) const;
  void add_row(std::vector<double> row);
};

/// %.17g; "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double v);

/// Comma separated, header row, LF line endings.
void write_csv(std::ostream& os, const CsvTable& t);
void write_csv_file(const std::filesystem::path& file, const CsvTable& t);

/// Throws ModelError with "source:line: message" on malformed input.
CsvTable parse_csv(std::string_view text, std::string_view source = "<csv>");
CsvTable read_csv_file(const std::filesystem::path& file);

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string iso_timestamp();

/// One document per run: command echo, model name, settings, timestamp,
/// named data series and warnings.
class Envelope {
 public:
  Envelope(std::string command, const std::vector<std::string>& args, std::string model_name);

  nlohmann::ordered_json& settings() { return doc_["settings"]; }
  nlohmann::ordered_json& results() { return doc_["results"]; }
  void add_series(const std::string& name, const CsvTable& t);
  void warn(const std::string& message);

  const nlohmann::ordered_json& document() const { return doc_; }
  std::string dump() const;
  void write_file(const std::filesystem::path& file) const;

 private:
  nlohmann::ordered_json doc_;
};

}  // namespace infbranch
