#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lgrowth {

std::string fnv1a_hex(const std::string& bytes);
std::string fnv1a_file_hex(const std::string& path);

struct ManifestEntry {
  std::string name;      // path relative to the run directory
  std::string checksum;  // fnv1a of the file contents
};

// One manifest per output directory: what command produced it, with which
// resolved configuration and seed, and checksums of every emitted artifact.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<ManifestEntry> artifacts;
  std::string created_utc;
};

void write_manifest(const RunManifest& manifest, const std::string& dir);
RunManifest read_manifest(const std::string& dir);

// Throws IoError naming the first artifact whose checksum does not match.
void verify_manifest(const RunManifest& manifest, const std::string& dir);

std::string utc_timestamp();

}  // namespace lgrowth
