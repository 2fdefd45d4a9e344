// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/core/types.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace vice::cli {

/// Environment lookup, injectable for tests.
using Env = std::function<std::optional<std::string>(const std::string&)>;

Env process_env();

struct BackendSettings {
    std::optional<std::string> reasoning_url;
    std::string reasoning_model = "gpt-3.5-turbo";
    std::optional<std::string> vision_url;
    std::optional<std::string> api_key;
    std::optional<std::filesystem::path> reasoning_script;
    std::optional<std::filesystem::path> vision_script;
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 2;
    /// check-backends fails a probe slower than this.
    std::chrono::milliseconds latency_budget{10'000};
    bool inline_images = false;
};

struct StatsSettings {
    bool rescale = true;
    bool permutation = false;
    int permutations = 10000;
    std::uint64_t seed = 0;
};

struct Settings {
    BackendSettings backends;
    PipelineConfig pipeline;
    std::optional<std::filesystem::path> templates;
    StatsSettings stats;
};

/// Settings from the environment, then the TOML file (sections [backends],
/// [pipeline], [stats]) on top. Command-line flags are applied by the
/// commands afterwards, so the precedence is flags > file > environment.
///
/// [pipeline] starts from the preset of its `variant` (default ViCE); any
/// explicit count that departs from the preset turns the variant into Custom.
/// Throws vice::Error(InvalidArgument) on unknown keys, bad types or values.
Settings load_settings(const std::optional<std::filesystem::path>& config_file, const Env& env);

/// Applies the preset of `variant` while keeping seed, temperature and the
/// other non-shape settings of `cfg`.
PipelineConfig with_variant(PipelineConfig cfg, Variant variant);

} // namespace vice::cli
