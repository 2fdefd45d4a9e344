// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/backend/backend.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace vice::prompts {

/// Versioned set of prompt templates. Placeholders are written `{{name}}`.
/// The version string enters the config fingerprint, so any template change
/// is visible in every transcript produced with it.
class TemplateSet {
public:
    /// Built-in English templates.
    static const TemplateSet& builtin();

    /// Built-in templates with `<name>.txt` files from `dir` layered on top.
    /// The version is read from `dir/VERSION` when present, otherwise derived
    /// from a digest of the overrides.
    static TemplateSet with_overrides(const std::filesystem::path& dir);

    [[nodiscard]] const std::string& version() const noexcept { return version_; }
    [[nodiscard]] const std::string& text(std::string_view name) const;

    /// Substitutes every placeholder; a placeholder without a value is an
    /// InvalidArgument error.
    [[nodiscard]] std::string render(std::string_view name,
                                     const std::map<std::string, std::string>& vars) const;

    [[nodiscard]] const std::map<std::string, std::string, std::less<>>& all() const noexcept { return texts_; }

private:
    TemplateSet(std::string version, std::map<std::string, std::string, std::less<>> texts)
        : version_(std::move(version)), texts_(std::move(texts)) {}

    std::string version_;
    std::map<std::string, std::string, std::less<>> texts_;
};

/// What every reasoning stage needs to talk to the model.
struct ReasoningContext {
    backend::ReasoningBackend& backend;
    backend::BackendPolicy policy;
    const TemplateSet& templates;
    int repair_retries = 1;
};

} // namespace vice::prompts
