#pragma once

#include <string>

namespace nsslice::log {

enum class Level { error, info, debug };

// Reads NSSLICE_LOG (error|info|debug); defaults to info.
void init_from_env();
void set_level(Level level);

void error(const std::string& msg);
void warn(const std::string& msg);
void info(const std::string& msg);
void debug(const std::string& msg);

}  // namespace nsslice::log
