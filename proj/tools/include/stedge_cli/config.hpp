#pragma once

// Run configuration: a JSON document whose keys mirror the training options.
// Command-line flags override file values.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "stedge/selftrain.hpp"

namespace stedge::cli {

/// Configuration or validation failure; `field` names the offending key or path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct RunConfig {
    std::filesystem::path dataset_dir;
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> manifest;
    selftrain::TrainConfig train;

    /// Throws ConfigError for missing paths or out-of-range values.
    void validate() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

/// Writes the resolved config to output_dir/config.json.
void echo_config(const RunConfig& cfg);

}  // namespace stedge::cli
