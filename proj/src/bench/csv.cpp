#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "streamgp/bench.hpp"

namespace streamgp {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

DataBatch read_csv(std::istream& in, DataMode mode, const std::string& name) {
  std::string line;
  int lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split(line);
    break;
  }
  if (header.empty()) throw InputError(name + ": missing header");
  const auto cols = header.size();
  if (mode == DataMode::kTimeSeries) {
    if (cols != 2 || header[0] != "t" || header[1] != "y") {
      throw InputError(name + " line " + std::to_string(lineno) + ": time-series header must be 't,y'");
    }
  } else {
    if (cols < 2 || header.back() != "y") {
      throw InputError(name + " line " + std::to_string(lineno) + ": multidim header must be 'x1,...,xd,y'");
    }
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      if (header[j] != "x" + std::to_string(j + 1)) {
        throw InputError(name + " line " + std::to_string(lineno) + ": expected column x" + std::to_string(j + 1));
      }
    }
  }
  std::vector<double> values;
  long rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != cols) {
      throw InputError(name + " line " + std::to_string(lineno) + ": expected " + std::to_string(cols) + " fields");
    }
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size()) {
        throw InputError(name + " line " + std::to_string(lineno) + ": cannot parse '" + c + "'");
      }
      if (!std::isfinite(v)) throw InputError(name + " line " + std::to_string(lineno) + ": non-finite value");
      values.push_back(v);
    }
    if (mode == DataMode::kTimeSeries && rows > 0) {
      const double prev = values[values.size() - 4];
      if (values[values.size() - 2] < prev) {
        throw InputError(name + " line " + std::to_string(lineno) + ": time column is not sorted ascending");
      }
    }
    ++rows;
  }
  DataBatch out;
  const auto d = static_cast<Eigen::Index>(cols - 1);
  out.X.resize(rows, d);
  out.y.resize(rows);
  for (long i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out.X(i, j) = values[static_cast<std::size_t>(i) * cols + static_cast<std::size_t>(j)];
    out.y[i] = values[static_cast<std::size_t>(i) * cols + cols - 1];
  }
  return out;
}

DataBatch load_csv(const std::string& path, DataMode mode) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file '" + path + "'");
  return read_csv(in, mode, path);
}

void write_csv(const DataBatch& data, std::ostream& out, DataMode mode) {
  data.validate();
  if (mode == DataMode::kTimeSeries) {
    if (data.X.cols() != 1) throw InputError("write_csv: time-series data must be 1-D");
    out << "t,y\n";
  } else {
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) out << "x" << (j + 1) << ",";
    out << "y\n";
  }
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) out << format_double(data.X(i, j)) << ",";
    out << format_double(data.y[i]) << "\n";
  }
}

void write_csv(const DataBatch& data, const std::string& path, DataMode mode) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_csv(data, out, mode);
}

}  // namespace streamgp
