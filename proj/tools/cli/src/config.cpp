// SPDX-License-Identifier: Apache-2.0
#include "vice/cli/config.hpp"

#include "vice/core/error.hpp"
#include "vice/pipeline/pipeline.hpp"

#include <fmt/format.h>
#include <toml.hpp>

#include <cstdlib>
#include <set>

namespace vice::cli {

Env process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str()); v != nullptr && *v != '\0') {
            return std::string(v);
        }
        return std::nullopt;
    };
}

PipelineConfig with_variant(PipelineConfig cfg, Variant variant) {
    auto p = pipeline::preset(variant);
    cfg.variant = p.variant;
    cfg.n_blind = p.n_blind;
    cfg.n_refine_per_round = p.n_refine_per_round;
    cfg.max_refine_rounds = p.max_refine_rounds;
    cfg.use_caption = p.use_caption;
    return cfg;
}

namespace {

void check_keys(const toml::table& table, std::string_view section, const std::set<std::string_view>& allowed) {
    for (const auto& [key, _] : table) {
        if (!allowed.contains(key.str())) {
            fail(ErrorCode::InvalidArgument, fmt::format("config: unknown key [{}].{}", section, key.str()));
        }
    }
}

template <typename T>
std::optional<T> get(const toml::table& table, std::string_view section, std::string_view key) {
    const auto* node = table.get(key);
    if (node == nullptr) {
        return std::nullopt;
    }
    auto v = node->value<T>();
    if (!v) {
        fail(ErrorCode::InvalidArgument, fmt::format("config: [{}].{} has the wrong type", section, key));
    }
    return v;
}

std::optional<int> get_int(const toml::table& table, std::string_view section, std::string_view key) {
    auto v = get<std::int64_t>(table, section, key);
    if (!v) {
        return std::nullopt;
    }
    return static_cast<int>(*v);
}

void apply_backends(const toml::table& t, BackendSettings& b) {
    check_keys(t, "backends",
               {"reasoning_url", "reasoning_model", "vision_url", "api_key", "reasoning_script", "vision_script",
                "timeout_ms", "max_retries", "latency_budget_ms", "inline_images"});
    if (auto v = get<std::string>(t, "backends", "reasoning_url")) b.reasoning_url = *v;
    if (auto v = get<std::string>(t, "backends", "reasoning_model")) b.reasoning_model = *v;
    if (auto v = get<std::string>(t, "backends", "vision_url")) b.vision_url = *v;
    if (auto v = get<std::string>(t, "backends", "api_key")) b.api_key = *v;
    if (auto v = get<std::string>(t, "backends", "reasoning_script")) b.reasoning_script = *v;
    if (auto v = get<std::string>(t, "backends", "vision_script")) b.vision_script = *v;
    if (auto v = get_int(t, "backends", "timeout_ms")) b.timeout = std::chrono::milliseconds(*v);
    if (auto v = get_int(t, "backends", "max_retries")) b.max_retries = *v;
    if (auto v = get_int(t, "backends", "latency_budget_ms")) b.latency_budget = std::chrono::milliseconds(*v);
    if (auto v = get<bool>(t, "backends", "inline_images")) b.inline_images = *v;
}

void apply_pipeline(const toml::table& t, Settings& s) {
    check_keys(t, "pipeline",
               {"variant", "n_blind", "n_refine_per_round", "max_refine_rounds", "use_caption", "temperature", "seed",
                "repair_retries", "ite_refine", "templates"});
    auto& cfg = s.pipeline;
    if (auto v = get<std::string>(t, "pipeline", "variant")) {
        auto variant = variant_from(*v);
        if (!variant) {
            fail(ErrorCode::InvalidArgument, fmt::format("config: unknown variant '{}'", *v));
        }
        cfg = with_variant(cfg, *variant);
    }
    const auto preset = cfg;
    if (auto v = get_int(t, "pipeline", "n_blind")) cfg.n_blind = *v;
    if (auto v = get_int(t, "pipeline", "n_refine_per_round")) cfg.n_refine_per_round = *v;
    if (auto v = get_int(t, "pipeline", "max_refine_rounds")) cfg.max_refine_rounds = *v;
    if (auto v = get<bool>(t, "pipeline", "use_caption")) cfg.use_caption = *v;
    if (cfg.n_blind != preset.n_blind || cfg.n_refine_per_round != preset.n_refine_per_round ||
        cfg.max_refine_rounds != preset.max_refine_rounds || cfg.use_caption != preset.use_caption) {
        cfg.variant = Variant::Custom;
    }
    if (auto v = get<double>(t, "pipeline", "temperature")) cfg.temperature = *v;
    if (auto v = get<std::int64_t>(t, "pipeline", "seed")) cfg.seed = *v;
    if (auto v = get_int(t, "pipeline", "repair_retries")) cfg.repair_retries = *v;
    if (auto v = get<bool>(t, "pipeline", "ite_refine")) cfg.ite_refine = *v;
    if (auto v = get<std::string>(t, "pipeline", "templates")) s.templates = *v;
}

void apply_stats(const toml::table& t, StatsSettings& st) {
    check_keys(t, "stats", {"rescale", "permutation", "permutations", "seed"});
    if (auto v = get<bool>(t, "stats", "rescale")) st.rescale = *v;
    if (auto v = get<bool>(t, "stats", "permutation")) st.permutation = *v;
    if (auto v = get_int(t, "stats", "permutations")) st.permutations = *v;
    if (auto v = get<std::int64_t>(t, "stats", "seed")) st.seed = static_cast<std::uint64_t>(*v);
}

} // namespace

Settings load_settings(const std::optional<std::filesystem::path>& config_file, const Env& env) {
    Settings s;
    s.pipeline = pipeline::preset(Variant::ViCE);
    if (auto v = env("VICE_REASONING_URL")) s.backends.reasoning_url = *v;
    if (auto v = env("VICE_REASONING_MODEL")) s.backends.reasoning_model = *v;
    if (auto v = env("VICE_VISION_URL")) s.backends.vision_url = *v;
    if (auto v = env("VICE_API_KEY")) s.backends.api_key = *v;

    if (!config_file) {
        return s;
    }
    toml::table root;
    try {
        root = toml::parse_file(config_file->string());
    } catch (const toml::parse_error& e) {
        fail(ErrorCode::InvalidArgument, fmt::format("config {}: {}", config_file->string(), e.description()));
    }
    const auto base = config_file->parent_path();
    for (const auto& [key, node] : root) {
        const auto* table = node.as_table();
        if (table == nullptr) {
            fail(ErrorCode::InvalidArgument, fmt::format("config: top-level key '{}' is not a section", key.str()));
        }
        if (key == "backends") {
            apply_backends(*table, s.backends);
        } else if (key == "pipeline") {
            apply_pipeline(*table, s);
        } else if (key == "stats") {
            apply_stats(*table, s.stats);
        } else {
            fail(ErrorCode::InvalidArgument, fmt::format("config: unknown section [{}]", key.str()));
        }
    }
    // Paths in the file are relative to the file.
    auto rebase = [&](std::optional<std::filesystem::path>& p) {
        if (p && p->is_relative()) {
            p = base / *p;
        }
    };
    rebase(s.backends.reasoning_script);
    rebase(s.backends.vision_script);
    rebase(s.templates);
    return s;
}

} // namespace vice::cli
