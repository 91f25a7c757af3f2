#include "metadiv/harness/manifest.hpp"

#include "metadiv/error.hpp"
#include "metadiv/numerics/rng.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#ifndef METADIV_VERSION
#define METADIV_VERSION "unknown"
#endif

namespace metadiv::harness {
namespace {

std::string iso8601(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace

std::string artifact_version() { return METADIV_VERSION; }

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256: digest initialization failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = in.gcount();
    if (got > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got)) != 1) {
      throw IoError("sha256: digest update failed");
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw IoError("sha256: finalization failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return hex.str();
}

RunManifest::RunManifest(std::filesystem::path output_dir, nlohmann::json config_echo,
                         std::string command)
    : output_dir_(std::move(output_dir)),
      config_(std::move(config_echo)),
      command_(std::move(command)),
      started_(std::chrono::system_clock::now()),
      started_steady_(std::chrono::steady_clock::now()) {}

void RunManifest::add_file(const std::filesystem::path& relative) {
  if (std::find(files_.begin(), files_.end(), relative) == files_.end()) files_.push_back(relative);
}

nlohmann::json RunManifest::build(const std::string& status) const {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& rel : files_) {
    const auto full = output_dir_ / rel;
    nlohmann::json entry = {{"path", rel.generic_string()}};
    if (std::filesystem::exists(full)) {
      entry["bytes"] = std::filesystem::file_size(full);
      entry["sha256"] = sha256_file(full);
    }
    files.push_back(entry);
  }
  nlohmann::json j = {{"status", status},
                      {"command", command_},
                      {"artifact_version", artifact_version()},
                      {"prng", std::string(RngStream::kAlgorithm)},
                      {"started_at", iso8601(started_)},
                      {"wall_clock_seconds", wall_clock_seconds_},
                      {"config", config_},
                      {"notes", notes_},
                      {"files", files}};
  if (!error_.is_null()) j["error"] = error_;
  return j;
}

void RunManifest::write(const nlohmann::json& j) const {
  std::filesystem::create_directories(output_dir_);
  const auto target = path();
  const auto tmp = output_dir_ / "manifest.json.tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

void RunManifest::write_started() { write(build("running")); }

void RunManifest::finalize_success() {
  wall_clock_seconds_ =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started_steady_).count();
  write(build("completed"));
}

void RunManifest::finalize_failure(const std::string& kind, const std::string& message) {
  wall_clock_seconds_ =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started_steady_).count();
  error_ = {{"kind", kind}, {"message", message}};
  write(build("failed"));
}

}  // namespace metadiv::harness
