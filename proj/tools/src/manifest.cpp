#include "manifest.hpp"

#include <ctime>
#include <fstream>
#include <stdexcept>

namespace lcsim::cli {

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t ExperimentManifest::fingerprint() const {
  std::string canon = name;
  canon += '\n';
  canon += tool_version;
  canon += '\n';
  canon += std::to_string(n_runs);
  for (const auto& [arm, config] : arm_configs) {
    canon += '\n';
    canon += arm;
    canon += '=';
    canon += config.dump();
  }
  return fnv1a64(canon);
}

std::string ExperimentManifest::fingerprint_hex() const {
  char buf[17];
  snprintf(buf, sizeof buf, "%016llx",
           static_cast<unsigned long long>(fingerprint()));
  return buf;
}

nlohmann::json ExperimentManifest::to_json() const {
  nlohmann::json arms;
  for (const auto& [arm, config] : arm_configs) arms[arm] = config;
  return {{"name", name},
          {"tool_version", tool_version},
          {"n_runs", n_runs},
          {"arms", arms},
          {"fingerprint", fingerprint_hex()},
          {"timestamp", timestamp}};
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const ExperimentManifest& manifest,
                    const std::string& dir) {
  const std::string path = dir + "/manifest.json";
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write manifest '" + path + "'");
  }
  out << manifest.to_json().dump(2) << '\n';
}

}  // namespace lcsim::cli
