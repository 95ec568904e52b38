#pragma once

#include <string>

namespace panelgwas::log {

enum class Level { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

void set_level(Level level);
Level level();

// All diagnostics go to standard error.
void warn(const std::string& msg);
void info(const std::string& msg);
void debug(const std::string& msg);

}  // namespace panelgwas::log
