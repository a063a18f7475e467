#pragma once

#include <filesystem>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

namespace fnd {

inline constexpr const char* kToolVersion = "0.1.0";

/// Lower-case hex SHA-256 of a file's bytes. Throws IoError.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

/// Written as manifest.json next to a command's artifacts.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::map<std::string, std::string> input_digests;  // path -> sha256
  std::map<std::string, std::string> output_digests;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  std::string started_at;   // ISO-8601 UTC
  std::string finished_at;

  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);
  std::string to_json() const;
};

std::string utc_timestamp();

/// Merges `m` into <dir>/manifest.json under the key m.command, so a
/// directory carries exactly one manifest even when several commands write
/// there.
void write_manifest(const std::filesystem::path& dir, const RunManifest& m);

}  // namespace fnd
