#pragma once

#include <spdlog/spdlog.h>

namespace stedge {

/// Applies the level named by STEDGE_LOG (trace, debug, info, warn, error, off).
/// Unset or unrecognized values leave the default (info).
void configure_logging();

}  // namespace stedge
