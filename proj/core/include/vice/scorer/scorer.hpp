// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/core/types.hpp"
#include "vice/prompts/templates.hpp"
#include "vice/questions/questions.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace vice::scorer {

inline constexpr double kMinScore = 0.0;
inline constexpr double kMaxScore = 10.0;

struct ParsedScore {
    double value = 0.0;
    bool clamped = false;
    /// True when the value came from a "SCORE:" line rather than the fallback.
    bool from_score_line = false;
    std::string rationale;
};

/// The first "SCORE: <decimal>" line (case-insensitive), clamped to [0, 10].
std::optional<ParsedScore> parse_score_line(std::string_view raw);

/// parse_score_line, falling back to the first standalone number in [0, 10]
/// followed by "/10" or "out of 10". Throws ScoreParseFailure.
ParsedScore parse_score(std::string_view raw);

/// Sends `request` and parses the reply. A reply without a score line gets up
/// to ctx.repair_retries repair turns; after that the fallback grammar is tried
/// on the replies, newest first.
EvaluationScore score_with(std::string request, prompts::ReasoningContext& ctx);

/// Final score from the prompt, caption, concepts and every question/answer
/// pair of every round, in order.
EvaluationScore request_score(const questions::EvaluationContext& ectx, std::span<const Round> rounds,
                              prompts::ReasoningContext& ctx);

} // namespace vice::scorer
