#include "nsslice/log.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace nsslice::log {
namespace {

spdlog::logger& logger() {
  static auto instance = [] {
    auto l = spdlog::stderr_color_mt("nsslice");
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::info);
    return l;
  }();
  return *instance;
}

}  // namespace

void set_level(Level level) {
  switch (level) {
    case Level::error: logger().set_level(spdlog::level::err); break;
    case Level::info: logger().set_level(spdlog::level::info); break;
    case Level::debug: logger().set_level(spdlog::level::debug); break;
  }
}

void init_from_env() {
  const char* env = std::getenv("NSSLICE_LOG");
  if (env == nullptr) return;
  std::string_view v(env);
  if (v == "error") set_level(Level::error);
  else if (v == "debug") set_level(Level::debug);
  else set_level(Level::info);
}

void error(const std::string& msg) { logger().error(msg); }
void warn(const std::string& msg) { logger().warn(msg); }
void info(const std::string& msg) { logger().info(msg); }
void debug(const std::string& msg) { logger().debug(msg); }

}  // namespace nsslice::log
