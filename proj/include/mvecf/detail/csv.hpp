#pragma once

#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "mvecf/errors.hpp"

namespace mvecf::detail {

inline std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(strip(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

// Reads a CSV with the exact expected header; returns data rows with the
// expected column count. Row numbers in errors are 1-based file lines.
inline std::vector<std::vector<std::string>> read_csv(std::istream& in,
                                                      const std::vector<std::string>& header,
                                                      const std::string& what) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(what + ": empty file");
  auto head = split_csv_line(line);
  if (head != header) {
    std::string want;
    for (std::size_t i = 0; i < header.size(); ++i) want += (i ? "," : "") + header[i];
    throw DataError(what + ": expected header '" + want + "', got '" + strip(line) + "'");
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (strip(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw DataError(what + ": line " + std::to_string(lineno) + ": expected " +
                      std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw DataError(what + ": no data rows");
  return rows;
}

inline double parse_double(const std::string& s, std::size_t lineno, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(what + ": line " + std::to_string(lineno) + ": bad number '" + s + "'");
  }
}

inline std::ifstream open_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open file: " + path);
  return f;
}

}  // namespace mvecf::detail
