#include "stedge/log.hpp"

#include <cstdlib>
#include <string>

namespace stedge {

void configure_logging() {
    const char* env = std::getenv("STEDGE_LOG");
    if (env == nullptr) return;
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only honour it when asked for explicitly.
    if (level != spdlog::level::off || std::string(env) == "off") {
        spdlog::set_level(level);
    }
}

}  // namespace stedge
