// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/core/types.hpp"

#include <optional>
#include <span>
#include <string>

namespace vice::prompts {

/// "- c1 [Object, Explicit] a cat", one line per concept.
std::string render_concepts(std::span<const VisualConcept> concepts);

/// Every question of every round with its answer, in order. Unanswered
/// questions (answers not yet collected) are rendered without an answer.
std::string render_history(std::span<const Round> rounds);

/// Caption line followed by a newline, or an empty string.
std::string caption_block(const std::optional<std::string>& caption);

} // namespace vice::prompts
