#include "atom/data_paths.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace atom {

DataPaths::DataPaths() {
  if (const char* env = std::getenv("ATOM_DATA_ROOT")) {
    root_ = env;
  } else {
    root_ = ATOM_SOURCE_ROOT;
  }
}

DataPaths::DataPaths(std::filesystem::path root) : root_(std::move(root)) {}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + p.string());
  out << content;
}

}  // namespace atom
