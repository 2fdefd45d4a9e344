// SPDX-License-Identifier: Apache-2.0
#include "vice/scorer/scorer.hpp"

#include "vice/core/error.hpp"
#include "vice/core/text.hpp"
#include "vice/prompts/render.hpp"

#include <fmt/format.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

namespace vice::scorer {

using backend::ChatMessage;
using backend::Role;

namespace {

bool is_digit(char c) {
    return std::isdigit(static_cast<unsigned char>(c)) != 0;
}

// Decimal at the start of `s`: [+-]?(\d+(\.\d*)?|\.\d+). Returns length consumed.
std::size_t scan_decimal(std::string_view s, double& value) {
    std::size_t i = 0;
    bool negative = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        negative = s[i] == '-';
        ++i;
    }
    const auto digits_start = i;
    while (i < s.size() && is_digit(s[i])) {
        ++i;
    }
    bool has_digits = i > digits_start;
    if (i < s.size() && s[i] == '.' && i + 1 < s.size() && is_digit(s[i + 1])) {
        ++i;
        while (i < s.size() && is_digit(s[i])) {
            ++i;
        }
        has_digits = true;
    }
    if (!has_digits) {
        return 0;
    }
    auto body = s.substr(digits_start, i - digits_start);
    double magnitude = 0.0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), magnitude);
    if (ec == std::errc::result_out_of_range) {
        magnitude = std::numeric_limits<double>::infinity();
    } else if (ec != std::errc{}) {
        return 0;
    }
    value = negative ? -magnitude : magnitude;
    return i;
}

ParsedScore clamp(double v) {
    ParsedScore out;
    if (std::isnan(v)) {
        v = kMinScore;
        out.clamped = true;
    }
    if (v < kMinScore) {
        v = kMinScore;
        out.clamped = true;
    } else if (v > kMaxScore) {
        v = kMaxScore;
        out.clamped = true;
    }
    out.value = v;
    return out;
}

std::string join_lines(const std::vector<std::string>& lines, std::size_t from) {
    std::string out;
    for (std::size_t i = from; i < lines.size(); ++i) {
        if (!out.empty()) {
            out.push_back('\n');
        }
        out += lines[i];
    }
    return text::trim(out);
}

std::optional<double> fallback_number(std::string_view raw) {
    const auto lower = text::to_lower(raw);
    std::string_view s(lower);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_digit(s[i])) {
            continue;
        }
        if (i > 0 && (std::isalnum(static_cast<unsigned char>(s[i - 1])) || s[i - 1] == '.' || s[i - 1] == '-')) {
            // Skip the rest of this token.
            while (i + 1 < s.size() && (is_digit(s[i + 1]) || s[i + 1] == '.')) {
                ++i;
            }
            continue;
        }
        double v = 0.0;
        const auto len = scan_decimal(s.substr(i), v);
        if (len == 0) {
            continue;
        }
        auto rest = s.substr(i + len);
        while (!rest.empty() && rest.front() == ' ') {
            rest.remove_prefix(1);
        }
        bool denominator = false;
        if (rest.starts_with("/")) {
            rest.remove_prefix(1);
            while (!rest.empty() && rest.front() == ' ') {
                rest.remove_prefix(1);
            }
            denominator = rest.starts_with("10") && (rest.size() == 2 || !is_digit(rest[2]));
        } else if (rest.starts_with("out of 10")) {
            denominator = rest.size() == 9 || !is_digit(rest[9]);
        }
        if (denominator && v >= kMinScore && v <= kMaxScore) {
            return v;
        }
        i += len - 1;
    }
    return std::nullopt;
}

} // namespace

std::optional<ParsedScore> parse_score_line(std::string_view raw) {
    const auto lines = text::split_lines(raw);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const auto lower = text::to_lower(lines[li]);
        const auto pos = lower.find("score:");
        if (pos == std::string::npos) {
            continue;
        }
        std::string_view rest(lower);
        rest.remove_prefix(pos + 6);
        while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t' || rest.front() == '*')) {
            rest.remove_prefix(1);
        }
        double v = 0.0;
        if (scan_decimal(rest, v) == 0) {
            continue;
        }
        auto out = clamp(v);
        out.from_score_line = true;
        out.rationale = join_lines(lines, li + 1);
        return out;
    }
    return std::nullopt;
}

ParsedScore parse_score(std::string_view raw) {
    if (auto strict = parse_score_line(raw)) {
        return *strict;
    }
    if (auto v = fallback_number(raw)) {
        auto out = clamp(*v);
        out.rationale = text::trim(raw);
        return out;
    }
    fail(ErrorCode::ScoreParseFailure, "no score found in model output");
}

EvaluationScore score_with(std::string request, prompts::ReasoningContext& ctx) {
    std::vector<ChatMessage> messages{{Role::System, ctx.templates.render("system", {})},
                                      {Role::User, std::move(request)}};
    std::vector<std::string> replies;
    for (int attempt = 0; attempt <= ctx.repair_retries; ++attempt) {
        if (attempt > 0) {
            messages.push_back({Role::User, ctx.templates.render("repair.score", {})});
        }
        auto reply = ctx.backend.complete(messages, ctx.policy);
        if (auto parsed = parse_score_line(reply)) {
            return {parsed->value, parsed->rationale, reply, parsed->clamped, attempt};
        }
        messages.push_back({Role::Assistant, reply.empty() ? std::string("(empty reply)") : reply});
        replies.push_back(std::move(reply));
    }
    for (auto it = replies.rbegin(); it != replies.rend(); ++it) {
        if (auto v = fallback_number(*it)) {
            auto parsed = clamp(*v);
            return {parsed.value, text::trim(*it), *it, parsed.clamped, ctx.repair_retries};
        }
    }
    fail(ErrorCode::ScoreParseFailure,
         fmt::format("no score in model output after {} repair(s)", ctx.repair_retries));
}

EvaluationScore request_score(const questions::EvaluationContext& ectx, std::span<const Round> rounds,
                              prompts::ReasoningContext& ctx) {
    require(!rounds.empty(), "request_score: no rounds");
    for (const auto& r : rounds) {
        require(r.answers.size() == r.questions.size(),
                fmt::format("request_score: round {} is incomplete", r.index));
    }
    auto request = ctx.templates.render("score", {{"prompt", ectx.prompt.text},
                                                  {"caption_block", prompts::caption_block(ectx.caption)},
                                                  {"concepts", prompts::render_concepts(ectx.concepts)},
                                                  {"history", prompts::render_history(rounds)}});
    return score_with(std::move(request), ctx);
}

} // namespace vice::scorer
