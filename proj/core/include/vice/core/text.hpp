// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vice::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> words(std::string_view s);

/// Case-folded, trimmed, whitespace-collapsed, trailing `.?!` removed.
std::string normalize(std::string_view s);

/// normalize() plus removal of the articles a/an/the. Used to compare answers.
std::string normalize_answer(std::string_view s);

/// Trimmed question text guaranteed to end with a single '?'.
std::string as_question(std::string_view s);

/// Key used for exact-match question deduplication.
std::string question_key(std::string_view s);

/// True when the normalized answer begins with the token "yes".
bool starts_with_yes(std::string_view answer);
/// True when the normalized answer begins with the token "no".
bool starts_with_no(std::string_view answer);

/// First JSON array found in `raw`, bracket-balanced and string-aware.
/// Returns an empty view when none is present.
std::string_view find_json_array(std::string_view raw);
/// First JSON object found in `raw`, as above.
std::string_view find_json_object(std::string_view raw);

} // namespace vice::text
