#include "occlabel/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

namespace occlabel {

spdlog::logger& log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = std::make_shared<spdlog::logger>(
        "occlabel", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    return l;
  }();
  return *logger;
}

}  // namespace occlabel
