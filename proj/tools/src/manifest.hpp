#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace lcsim::cli {

uint64_t fnv1a64(std::string_view bytes);

// Describes one experiment invocation: the resolved per-arm configs and the
// run count. The fingerprint covers everything except the timestamp, so a
// rerun of the same experiment produces the same hash and every data file
// can reference it.
struct ExperimentManifest {
  std::string name;
  std::string tool_version;
  int n_runs = 0;
  std::vector<std::pair<std::string, nlohmann::json>> arm_configs;
  std::string timestamp;  // ISO 8601 UTC, informational only

  uint64_t fingerprint() const;
  std::string fingerprint_hex() const;
  nlohmann::json to_json() const;
};

std::string utc_timestamp();

// Serializes the manifest (pretty JSON) to <dir>/manifest.json.
void write_manifest(const ExperimentManifest& manifest,
                    const std::string& dir);

}  // namespace lcsim::cli
