#include "rasterfusion/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string_view>

namespace rasterfusion {

void configure_logging() {
  static bool configured = false;
  if (!configured) {
    auto logger = spdlog::stderr_logger_st("rasterfusion");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    configured = true;
  }
  const char* env = std::getenv("RASTERFUSION_LOG");
  const std::string_view level = env ? env : "info";
  if (level == "quiet") {
    spdlog::set_level(spdlog::level::off);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

}  // namespace rasterfusion
