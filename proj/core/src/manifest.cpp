#include "logicforge/manifest.hpp"

#include <ctime>

#include "logicforge/version.hpp"

#include "jsonl_util.hpp"

namespace logicforge {

using detail::ordered_json;

namespace {

std::string iso8601_utc(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest,
                    std::chrono::system_clock::time_point started_at,
                    double wall_clock_seconds) {
  ordered_json j{{"command", manifest.command},
                 {"version", kVersion},
                 {"seed", manifest.seed},
                 {"config", manifest.config},
                 {"inputs", manifest.inputs},
                 {"outputs", manifest.outputs},
                 {"started_at", iso8601_utc(started_at)},
                 {"wall_clock_seconds", wall_clock_seconds}};
  auto out = detail::open_output(dir / ("manifest-" + manifest.command + ".json"));
  out << j.dump(2) << '\n';
}

}  // namespace logicforge
