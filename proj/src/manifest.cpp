#include "lgrowth/manifest.hpp"

#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lgrowth/errors.hpp"

namespace lgrowth {

using nlohmann::json;

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fnv1a_file_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for checksum: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_manifest(const RunManifest& manifest, const std::string& dir) {
  json j;
  j["command"] = manifest.command;
  j["config_hash"] = manifest.config_hash;
  j["seed"] = manifest.seed;
  j["inputs"] = manifest.inputs;
  j["artifacts"] = json::array();
  for (const auto& a : manifest.artifacts)
    j["artifacts"].push_back({{"name", a.name}, {"checksum", a.checksum}});
  j["created_utc"] = manifest.created_utc;
  std::ofstream out(dir + "/manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir);
  out << j.dump(2) << "\n";
}

RunManifest read_manifest(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw IoError("missing manifest.json in " + dir);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest in " + dir + ": " + e.what());
  }
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    for (const auto& a : j.at("artifacts"))
      m.artifacts.push_back({a.at("name").get<std::string>(),
                             a.at("checksum").get<std::string>()});
    m.created_utc = j.value("created_utc", "");
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest in " + dir + ": " + e.what());
  }
  return m;
}

void verify_manifest(const RunManifest& manifest, const std::string& dir) {
  for (const auto& a : manifest.artifacts) {
    const std::string actual = fnv1a_file_hex(dir + "/" + a.name);
    if (actual != a.checksum)
      throw IoError("checksum mismatch for " + a.name + ": manifest " +
                    a.checksum + ", file " + actual);
  }
}

}  // namespace lgrowth
