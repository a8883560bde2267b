#pragma once

#include <spdlog/spdlog.h>

namespace occlabel {

/// Process-wide logger writing to standard error.
spdlog::logger& log();

}  // namespace occlabel
