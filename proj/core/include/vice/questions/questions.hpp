// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/core/types.hpp"
#include "vice/prompts/templates.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vice::questions {

/// What the reasoning model is told about the evaluation in every question
/// stage: the prompt, the optional caption and the expected concepts.
struct EvaluationContext {
    const PromptSpec& prompt;
    const std::optional<std::string>& caption;
    std::span<const VisualConcept> concepts;
};

struct ParsedQuestion {
    std::string text;
    std::vector<std::string> targets;
};

/// First JSON array in `raw`; elements are {"text", "target_concept_ids"}
/// objects or bare strings. Texts are normalized to end with '?'.
/// Throws NoJsonArrayFound or ElementMissingText.
std::vector<ParsedQuestion> parse_question_payload(std::string_view raw);

struct QuestionSet {
    std::vector<Question> questions;
    int repairs = 0;
    bool truncated = false;
    std::vector<std::string> warnings;
};

/// Asks for exactly `n` questions with `request` as the user turn. Parse
/// failures are repaired up to ctx.repair_retries times; a count mismatch gets
/// one repair turn asking for the exact count. Persistent surplus is
/// truncated (flagged); persistent shortfall raises QuestionCountShortfall.
/// Target ids not present in `concepts` are dropped with a warning.
QuestionSet request_exact(std::string request, int n, std::span<const VisualConcept> concepts,
                          prompts::ReasoningContext& ctx);

/// Blind questions: generated from the concepts (and caption) before any
/// question is put to the image. Returns exactly `n` questions, round 0.
QuestionSet generate_blind(const EvaluationContext& ectx, int n, prompts::ReasoningContext& ctx);

struct RefineDecision {
    Decision decision = Decision::Stop;
    bool consulted_model = false;
    bool fail_closed = false;
    int repairs = 0;
    std::string raw;
};

/// Leading "yes" / "no" token, case-insensitive; nullopt otherwise.
std::optional<Decision> parse_decision(std::string_view raw);

/// Decision D. At the round cap this returns Stop without calling the model.
/// Otherwise the model sees the full history; an unparseable reply gets one
/// repair turn and then falls back to Stop (fail_closed).
RefineDecision decide_refine(const EvaluationContext& ectx, std::span<const Round> history, int rounds_so_far,
                             int max_rounds, prompts::ReasoningContext& ctx);

/// Up to `k` follow-up questions conditioned on every prior question/answer
/// pair. Questions repeating earlier ones (normalized exact match) are dropped;
/// if nothing new remains, NoNewQuestions is raised.
QuestionSet generate_refinement(const EvaluationContext& ectx, std::span<const Round> history, int k,
                                prompts::ReasoningContext& ctx);

} // namespace vice::questions
