#pragma once

#include <filesystem>
#include <string>

namespace atom {

/// Locates the data tree (prompts/, fixtures/, scenarios/, rules/).
/// Resolution order: explicit path, ATOM_DATA_ROOT env var, compiled-in
/// source root.
class DataPaths {
 public:
  DataPaths();
  explicit DataPaths(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path prompts() const { return root_ / "prompts"; }
  std::filesystem::path fixtures() const { return root_ / "fixtures"; }
  std::filesystem::path scenarios() const { return root_ / "scenarios"; }
  std::filesystem::path rules() const { return root_ / "rules"; }

 private:
  std::filesystem::path root_;
};

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);

}  // namespace atom
