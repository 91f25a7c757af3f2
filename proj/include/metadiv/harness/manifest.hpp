#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace metadiv::harness {

std::string artifact_version();

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// manifest.json of one run directory. Written with status "running" when the
/// run starts and rewritten with the file inventory when it ends.
class RunManifest {
 public:
  RunManifest(std::filesystem::path output_dir, nlohmann::json config_echo, std::string command);

  const std::filesystem::path& output_dir() const noexcept { return output_dir_; }
  std::filesystem::path path() const { return output_dir_ / "manifest.json"; }

  /// Free-form run facts (task seeds, substituted heads, convergence flags).
  nlohmann::json& notes() noexcept { return notes_; }

  /// Registers an output file (relative to the output directory).
  void add_file(const std::filesystem::path& relative);

  void write_started();
  void finalize_success();
  void finalize_failure(const std::string& kind, const std::string& message);

 private:
  nlohmann::json build(const std::string& status) const;
  void write(const nlohmann::json& j) const;

  std::filesystem::path output_dir_;
  nlohmann::json config_;
  std::string command_;
  nlohmann::json notes_ = nlohmann::json::object();
  nlohmann::json error_ = nullptr;
  std::vector<std::filesystem::path> files_;
  std::chrono::system_clock::time_point started_;
  std::chrono::steady_clock::time_point started_steady_;
  double wall_clock_seconds_ = 0.0;
};

}  // namespace metadiv::harness
