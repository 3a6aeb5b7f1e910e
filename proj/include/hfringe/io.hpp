#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfringe/errors.hpp"

namespace hfringe::io {

using json = nlohmann::ordered_json;

// Shortest round-trippable decimal form; keeps dataset files byte-stable.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char trial[32];
      std::snprintf(trial, sizeof(trial), "%.*g", prec, v);
      std::sscanf(trial, "%lf", &back);
      if (back == v) return trial;
    }
  }
  return buf;
}

// All file writes go through a temp file plus rename so readers never see a
// partial dataset.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw ValidationError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_xy_csv(const std::filesystem::path& path, const std::string& x_name,
                         const std::string& y_name, std::span<const double> x,
                         std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("csv write: column length mismatch");
  std::ostringstream out;
  out << x_name << ',' << y_name << '\n';
  for (std::size_t i = 0; i < x.size(); ++i)
    out << format_double(x[i]) << ',' << format_double(y[i]) << '\n';
  write_text_atomic(path, out.str());
}

struct XyData {
  std::string x_name, y_name;
  std::vector<double> x, y;
};

inline XyData read_xy_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset: " + path.string());
  XyData data;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    std::ostringstream msg;
    msg << path.string() << ":" << line_no << ": " << why;
    throw ValidationError(msg.str());
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) fail("expected two comma-separated columns");
    const std::string left = line.substr(0, comma);
    const std::string right = line.substr(comma + 1);
    if (right.find(',') != std::string::npos) fail("expected exactly two columns");
    char* end = nullptr;
    const double xv = std::strtod(left.c_str(), &end);
    const bool x_ok = end == left.c_str() + left.size() && !left.empty();
    end = nullptr;
    const double yv = std::strtod(right.c_str(), &end);
    const bool y_ok = end == right.c_str() + right.size() && !right.empty();
    if (!x_ok || !y_ok) {
      if (line_no == 1 && data.x.empty()) {  // header row
        data.x_name = left;
        data.y_name = right;
        continue;
      }
      fail("malformed numeric row");
    }
    data.x.push_back(xv);
    data.y.push_back(yv);
  }
  if (data.x.empty()) throw ValidationError(path.string() + ": no data rows");
  return data;
}

inline json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return j;
}

inline void write_json_atomic(const std::filesystem::path& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace hfringe::io
