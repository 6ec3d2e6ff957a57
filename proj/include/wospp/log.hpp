#pragma once

#include <spdlog/logger.h>

namespace wospp {

// Diagnostics logger on stderr. Verbosity comes from WOSPP_LOG
// (error, warn, info, debug); default warn.
spdlog::logger& log();

}  // namespace wospp
