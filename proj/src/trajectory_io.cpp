#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sasim/error.hpp"
#include "sasim/io.hpp"

namespace sasim::io {

namespace {

constexpr const char* kMagic = "# format=sas-trajectory version=";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream s(line);
  while (std::getline(s, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

void write_trajectory(const std::filesystem::path& path, const engine::Trajectory& tr) {
  std::string text = kMagic + std::to_string(kTrajectoryFormatVersion) + "\n";
  text += "t,interpolated";
  for (const auto& c : tr.channels) text += "," + c;
  text += "\n";
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    append_number(text, tr.times[i]);
    text += tr.interpolated[i] ? ",1" : ",0";
    for (double v : tr.rows[i]) {
      text += ",";
      append_number(text, v);
    }
    text += "\n";
  }
  write_text(path, text);
}

engine::Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line) || line.rfind(kMagic, 0) != 0) {
    throw Error(ErrorKind::comparison, where + ":1: not a trajectory file (missing format line)");
  }
  if (std::atoi(line.c_str() + std::char_traits<char>::length(kMagic)) != kTrajectoryFormatVersion) {
    throw Error(ErrorKind::comparison, where + ":1: unsupported trajectory version");
  }
  if (!std::getline(in, line)) throw Error(ErrorKind::comparison, where + ":2: missing header");
  const auto header = split(line);
  if (header.size() < 2 || header[0] != "t" || header[1] != "interpolated") {
    throw Error(ErrorKind::comparison, where + ":2: header must start with t,interpolated");
  }
  engine::Trajectory tr;
  tr.channels.assign(header.begin() + 2, header.end());

  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::comparison, where + ":" + std::to_string(lineno) + ": expected " +
                                             std::to_string(header.size()) + " columns");
    }
    std::vector<double> values(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      char* end = nullptr;
      values[k] = std::strtod(cells[k].c_str(), &end);
      if (end == cells[k].c_str() || *end != '\0') {
        throw Error(ErrorKind::comparison, where + ":" + std::to_string(lineno) + ": bad number '" + cells[k] + "'");
      }
    }
    if (!tr.times.empty() && !(values[0] > tr.times.back())) {
      throw Error(ErrorKind::comparison, where + ":" + std::to_string(lineno) + ": times must increase");
    }
    tr.times.push_back(values[0]);
    tr.interpolated.push_back(values[1] != 0.0);
    tr.rows.emplace_back(values.begin() + 2, values.end());
  }
  return tr;
}

}  // namespace sasim::io
