#pragma once

#include <string>

namespace logicforge {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

// Parsed once from LOGICFORGE_LOG ("error", "info", "debug"); defaults to info.
LogLevel log_level();

void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace logicforge
