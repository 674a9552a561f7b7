#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace intdiff {

/// Shortest round-trip formatting is not used: every value is written with
/// 17 significant digits so reruns are byte-identical.
std::string fmt17(double v);

/// Files staged in memory and published together. `commit` writes each file
/// to a temporary name in the target directory and renames it into place
/// only after every temporary has been written.
class ArtifactSet {
 public:
  void add(std::string name, std::string content);
  void commit(const std::filesystem::path& dir) const;
  const std::vector<std::pair<std::string, std::string>>& files() const noexcept { return files_; }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Reads the `y` column of a CSV with header `i,y` (or a single `y` column).
std::vector<double> read_observations_csv(const std::filesystem::path& path);

}  // namespace intdiff
