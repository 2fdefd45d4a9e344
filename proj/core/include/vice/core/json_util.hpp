// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string_view>

#include <nlohmann/json.hpp>

namespace vice::json_util {

/// First substring of `raw` that parses as a JSON array. Prose, code fences and
/// bracketed non-JSON text before it are skipped.
std::optional<nlohmann::json> first_array(std::string_view raw);

/// First substring of `raw` that parses as a JSON object.
std::optional<nlohmann::json> first_object(std::string_view raw);

} // namespace vice::json_util
