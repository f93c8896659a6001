#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace logicforge {

// Written next to every command's outputs as manifest-<command>.json.
// Deliberately the only run artifact containing wall-clock data, so byte
// comparisons for reproducibility can skip manifests and nothing else.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
};

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest,
                    std::chrono::system_clock::time_point started_at,
                    double wall_clock_seconds);

}  // namespace logicforge
