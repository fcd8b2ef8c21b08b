#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace bstc::cli {

std::string sha256_file(const std::filesystem::path& path);

/// Run record written next to a command's outputs.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> args);

  void add_input(const std::string& role, const std::filesystem::path& path);
  void set_config(std::vector<std::pair<std::string, std::string>> entries) { config_ = std::move(entries); }
  void set_seed(std::uint64_t seed) { seed_ = seed; has_seed_ = true; }

  /// Serializes with the elapsed wall-clock time; the file appears atomically.
  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  std::vector<std::string> args_;
  std::vector<std::pair<std::string, std::string>> config_;
  std::vector<std::pair<std::string, std::filesystem::path>> inputs_;
  std::uint64_t seed_ = 0;
  bool has_seed_ = false;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace bstc::cli
