#include "infbranch/report.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "infbranch/errors.hpp"

namespace infbranch {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_cell(const std::string& cell) {
  if (cell == "nan") return std::nan("");
  if (cell == "inf") return HUGE_VAL;
  if (cell == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw std::invalid_argument("not a number: '" + cell + "'");
  return v;
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ModelError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::out_of_range("no column named " + std::string(name));
}

std::vector<double> CsvTable::column_values(std::string_view name) const {
  const std::size_t c = column(name);
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(r[c]);
  return v;
}

void CsvTable::add_row(std::vector<double> row) {
  if (row.size() != header.size()) throw std::invalid_argument("row width does not match header");
  rows.push_back(std::move(row));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& os, const CsvTable& t) {
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_double(r[i]);
    os << '\n';
  }
}

void write_csv_file(const std::filesystem::path& file, const CsvTable& t) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  write_csv(out, t);
}

CsvTable parse_csv(std::string_view text, std::string_view source) {
  CsvTable t;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    const auto loc = std::string(source) + ":" + std::to_string(line_no) + ": ";
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ModelError(loc + "expected " + std::to_string(t.header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(parse_cell(c));
      } catch (const std::invalid_argument& e) {
        throw ModelError(loc + e.what());
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ModelError(std::string(source) + ": missing header row");
  return t;
}

CsvTable read_csv_file(const std::filesystem::path& file) {
  return parse_csv(read_file(file), file.string());
}

std::string iso_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Envelope::Envelope(std::string command, const std::vector<std::string>& args,
                   std::string model_name) {
  doc_["command"] = std::move(command);
  doc_["arguments"] = args;
  doc_["model"] = std::move(model_name);
  doc_["timestamp"] = iso_timestamp();
  doc_["settings"] = nlohmann::ordered_json::object();
  doc_["results"] = nlohmann::ordered_json::object();
  doc_["series"] = nlohmann::ordered_json::object();
  doc_["warnings"] = nlohmann::ordered_json::array();
}

void Envelope::add_series(const std::string& name, const CsvTable& t) {
  nlohmann::ordered_json cols = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    nlohmann::ordered_json values = nlohmann::ordered_json::array();
    for (const auto& r : t.rows) values.push_back(r[c]);
    cols[t.header[c]] = std::move(values);
  }
  doc_["series"][name] = std::move(cols);
}

void Envelope::warn(const std::string& message) { doc_["warnings"].push_back(message); }

std::string Envelope::dump() const { return doc_.dump(2) + "\n"; }

void Envelope::write_file(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << dump();
}

}  // namespace infbranch
