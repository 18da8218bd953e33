#include "tpn2f/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string>

namespace tpn2f {

void init_logging() {
  auto logger = spdlog::get("tpn2f");
  if (!logger) logger = spdlog::stderr_logger_mt("tpn2f");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);

  const char* env = std::getenv("TPN2F_LOG");
  const std::string level = env ? env : "info";
  if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else if (level == "warn") spdlog::set_level(spdlog::level::warn);
  else {
    spdlog::set_level(spdlog::level::info);
    if (level != "info") spdlog::warn("TPN2F_LOG='{}' is not one of debug, info, warn; using info", level);
  }
}

}  // namespace tpn2f
