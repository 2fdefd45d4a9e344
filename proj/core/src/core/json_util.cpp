// SPDX-License-Identifier: Apache-2.0
#include "vice/core/json_util.hpp"

#include "vice/core/text.hpp"

namespace vice::json_util {

namespace {

template <typename Finder>
std::optional<nlohmann::json> first_parsable(std::string_view raw, Finder find) {
    while (!raw.empty()) {
        auto candidate = find(raw);
        if (candidate.empty()) {
            return std::nullopt;
        }
        auto parsed = nlohmann::json::parse(candidate, nullptr, /*allow_exceptions=*/false);
        if (!parsed.is_discarded()) {
            return parsed;
        }
        const auto offset = static_cast<std::size_t>(candidate.data() - raw.data());
        raw.remove_prefix(offset + 1);
    }
    return std::nullopt;
}

} // namespace

std::optional<nlohmann::json> first_array(std::string_view raw) {
    return first_parsable(raw, [](std::string_view s) { return text::find_json_array(s); });
}

std::optional<nlohmann::json> first_object(std::string_view raw) {
    return first_parsable(raw, [](std::string_view s) { return text::find_json_object(s); });
}

} // namespace vice::json_util
