#include "intdiff/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "intdiff/errors.hpp"

namespace intdiff {

namespace fs = std::filesystem;

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ArtifactSet::add(std::string name, std::string content) {
  files_.emplace_back(std::move(name), std::move(content));
}

namespace {

fs::path temp_name(const fs::path& target) {
  return target.parent_path() / ("." + target.filename().string() + ".tmp");
}

void write_temp(const fs::path& tmp, const std::string& content) {
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw std::runtime_error("failed writing " + tmp.string());
}

}  // namespace

void ArtifactSet::commit(const fs::path& dir) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<fs::path> temps;
  try {
    for (const auto& [name, content] : files_) {
      temps.push_back(temp_name(dir / name));
      write_temp(temps.back(), content);
    }
  } catch (...) {
    for (const auto& t : temps) fs::remove(t, ec);
    throw;
  }
  for (std::size_t i = 0; i < files_.size(); ++i) fs::rename(temps[i], dir / files_[i].first);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = temp_name(path);
  write_temp(tmp, content);
  fs::rename(tmp, path);
}

std::vector<double> read_observations_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("data", "cannot read data file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("data", "data file is empty");
  int column = -1;
  {
    std::stringstream hs(line);
    std::string cell;
    for (int c = 0; std::getline(hs, cell, ','); ++c) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      if (cell == "y") column = c;
    }
  }
  if (column < 0) throw ConfigError("data", "data file needs a 'y' column");
  std::vector<double> y;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::stringstream ls(line);
    std::string cell;
    for (int c = 0; c <= column; ++c)
      if (!std::getline(ls, cell, ',')) throw ConfigError("data", "short row " + std::to_string(row) + " in data file", row);
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
      y.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("data", "bad value on row " + std::to_string(row) + " of data file", row);
    }
  }
  return y;
}

}  // namespace intdiff
