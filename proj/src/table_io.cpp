#include "glsm/table_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "glsm/error.hpp"

namespace glsm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  if (line.find(',') != std::string::npos) {
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(trim(f));
    if (!line.empty() && line.back() == ',') out.emplace_back();
  } else {
    std::istringstream ss(line);
    std::string f;
    while (ss >> f) out.push_back(f);
  }
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec == std::errc() && ptr == end) return true;
  // from_chars rejects "inf"/"nan" spellings used by some writers.
  char* e2 = nullptr;
  v = std::strtod(s.c_str(), &e2);
  return e2 == s.c_str() + s.size();
}

}  // namespace

void Table::add_row(const std::vector<double>& row) {
  if (row.size() != cols()) throw DataError("table row has wrong number of fields");
  values_.insert(values_.end(), row.begin(), row.end());
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t j = 0; j < header_.size(); ++j)
    if (header_[j] == name) return j;
  throw DataError("missing column: " + name);
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  Table t;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    row.assign(fields.size(), 0.0);
    bool numeric = true;
    for (std::size_t j = 0; j < fields.size() && numeric; ++j) numeric = parse_double(fields[j], row[j]);
    if (first) {
      first = false;
      if (!numeric) {
        t = Table(fields);
        continue;
      }
      std::vector<std::string> names;
      for (std::size_t j = 0; j < fields.size(); ++j) names.push_back("c" + std::to_string(j));
      t = Table(names);
    }
    if (!numeric) throw DataError(path + ":" + std::to_string(lineno) + ": non-numeric field");
    if (row.size() != t.cols())
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.cols()) +
                      " fields");
    t.add_row(row);
  }
  return t;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_table(const std::string& path, const Table& t) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (std::size_t j = 0; j < t.cols(); ++j) out << (j ? "," : "") << t.header()[j];
  out << '\n';
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) out << (j ? "," : "") << format_double(t.at(i, j));
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace glsm
