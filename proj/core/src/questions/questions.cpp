// SPDX-License-Identifier: Apache-2.0
#include "vice/questions/questions.hpp"

#include "vice/core/error.hpp"
#include "vice/core/json_util.hpp"
#include "vice/core/text.hpp"
#include "vice/prompts/render.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <set>

namespace vice::questions {

using backend::ChatMessage;
using backend::Role;

std::vector<ParsedQuestion> parse_question_payload(std::string_view raw) {
    auto array = json_util::first_array(raw);
    if (!array) {
        fail(ErrorCode::NoJsonArrayFound, "no JSON array found in question payload");
    }
    std::vector<ParsedQuestion> out;
    std::size_t n = 0;
    for (const auto& element : *array) {
        ++n;
        ParsedQuestion q;
        if (element.is_string()) {
            q.text = element.get<std::string>();
        } else if (element.is_object()) {
            auto t = element.find("text");
            if (t == element.end()) {
                t = element.find("question");
            }
            if (t == element.end() || !t->is_string()) {
                fail(ErrorCode::ElementMissingText, fmt::format("question element {} has no \"text\"", n));
            }
            q.text = t->get<std::string>();
            if (auto ids = element.find("target_concept_ids"); ids != element.end() && ids->is_array()) {
                for (const auto& id : *ids) {
                    if (id.is_string()) {
                        q.targets.push_back(id.get<std::string>());
                    }
                }
            }
        } else {
            fail(ErrorCode::ElementMissingText, fmt::format("question element {} is neither an object nor a string", n));
        }
        q.text = text::as_question(q.text);
        if (q.text.empty()) {
            fail(ErrorCode::ElementMissingText, fmt::format("question element {} has empty text", n));
        }
        out.push_back(std::move(q));
    }
    return out;
}

namespace {

std::vector<ChatMessage> start_messages(const prompts::TemplateSet& tpl, std::string request) {
    return {{Role::System, tpl.render("system", {})}, {Role::User, std::move(request)}};
}

struct ParseAttempt {
    std::vector<ParsedQuestion> questions;
    std::string reply;
    int repairs = 0;
};

// Asks, then repairs unparseable replies up to ctx.repair_retries times.
ParseAttempt ask_for_questions(std::vector<ChatMessage>& messages, prompts::ReasoningContext& ctx) {
    std::string last_error;
    for (int attempt = 0; attempt <= ctx.repair_retries; ++attempt) {
        if (attempt > 0) {
            messages.push_back({Role::User, ctx.templates.render("repair.json_array", {})});
        }
        auto reply = ctx.backend.complete(messages, ctx.policy);
        messages.push_back({Role::Assistant, reply.empty() ? std::string("(empty reply)") : reply});
        try {
            return {parse_question_payload(reply), std::move(reply), attempt};
        } catch (const Error& e) {
            last_error = e.what();
        }
    }
    fail(ErrorCode::ParseError,
         fmt::format("question generation failed after {} repair(s): {}", ctx.repair_retries, last_error));
}

std::vector<std::string> known_targets(const ParsedQuestion& q, const std::set<std::string>& ids,
                                       std::vector<std::string>& warnings) {
    std::vector<std::string> out;
    for (const auto& t : q.targets) {
        if (ids.contains(t)) {
            if (std::find(out.begin(), out.end(), t) == out.end()) {
                out.push_back(t);
            }
        } else {
            warnings.push_back(fmt::format("dropped unknown target '{}' of question \"{}\"", t, q.text));
        }
    }
    return out;
}

std::set<std::string> concept_ids(std::span<const VisualConcept> concepts) {
    std::set<std::string> ids;
    for (const auto& c : concepts) {
        ids.insert(c.id);
    }
    return ids;
}

std::map<std::string, std::string> context_vars(const EvaluationContext& ectx) {
    return {{"prompt", ectx.prompt.text},
            {"caption_block", prompts::caption_block(ectx.caption)},
            {"concepts", prompts::render_concepts(ectx.concepts)}};
}

} // namespace

QuestionSet request_exact(std::string request, int n, std::span<const VisualConcept> concepts,
                          prompts::ReasoningContext& ctx) {
    require(n >= 1, "question count must be >= 1");
    auto messages = start_messages(ctx.templates, std::move(request));
    auto attempt = ask_for_questions(messages, ctx);
    QuestionSet out;
    out.repairs = attempt.repairs;
    auto parsed = std::move(attempt.questions);

    if (static_cast<int>(parsed.size()) != n) {
        messages.push_back({Role::User, ctx.templates.render("repair.question_count",
                                                              {{"n", std::to_string(n)},
                                                               {"got", std::to_string(parsed.size())}})});
        auto reply = ctx.backend.complete(messages, ctx.policy);
        ++out.repairs;
        try {
            parsed = parse_question_payload(reply);
        } catch (const Error& e) {
            out.warnings.push_back(fmt::format("count repair reply unparseable: {}", e.what()));
        }
    }
    if (static_cast<int>(parsed.size()) < n) {
        fail(ErrorCode::QuestionCountShortfall,
             fmt::format("model returned {} questions, {} required", parsed.size(), n));
    }
    if (static_cast<int>(parsed.size()) > n) {
        out.warnings.push_back(fmt::format("truncated {} questions to {}", parsed.size(), n));
        out.truncated = true;
        parsed.resize(static_cast<std::size_t>(n));
    }

    const auto ids = concept_ids(concepts);
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        Question q;
        q.id = fmt::format("q0-{}", i + 1);
        q.round = 0;
        q.kind = QuestionKind::Blind;
        q.text = parsed[i].text;
        q.target_concepts = known_targets(parsed[i], ids, out.warnings);
        out.questions.push_back(std::move(q));
    }
    return out;
}

QuestionSet generate_blind(const EvaluationContext& ectx, int n, prompts::ReasoningContext& ctx) {
    require(!ectx.concepts.empty(), "generate_blind: concept list is empty");
    require(n >= 1, "generate_blind: n must be >= 1");
    auto vars = context_vars(ectx);
    vars["n"] = std::to_string(n);
    return request_exact(ctx.templates.render("questions.blind", vars), n, ectx.concepts, ctx);
}

std::optional<Decision> parse_decision(std::string_view raw) {
    if (text::starts_with_yes(raw)) {
        return Decision::Refine;
    }
    if (text::starts_with_no(raw)) {
        return Decision::Stop;
    }
    return std::nullopt;
}

RefineDecision decide_refine(const EvaluationContext& ectx, std::span<const Round> history, int rounds_so_far,
                             int max_rounds, prompts::ReasoningContext& ctx) {
    require(!history.empty(), "decide_refine: history is empty");
    RefineDecision out;
    if (rounds_so_far >= max_rounds) {
        return out;
    }
    out.consulted_model = true;
    auto vars = context_vars(ectx);
    vars["history"] = prompts::render_history(history);
    auto messages = start_messages(ctx.templates, ctx.templates.render("decide", vars));
    out.raw = ctx.backend.complete(messages, ctx.policy);
    if (auto d = parse_decision(out.raw)) {
        out.decision = *d;
        return out;
    }
    messages.push_back({Role::Assistant, out.raw.empty() ? std::string("(empty reply)") : out.raw});
    messages.push_back({Role::User, ctx.templates.render("repair.yes_no", {})});
    out.repairs = 1;
    out.raw = ctx.backend.complete(messages, ctx.policy);
    if (auto d = parse_decision(out.raw)) {
        out.decision = *d;
        return out;
    }
    out.decision = Decision::Stop;
    out.fail_closed = true;
    return out;
}

QuestionSet generate_refinement(const EvaluationContext& ectx, std::span<const Round> history, int k,
                                prompts::ReasoningContext& ctx) {
    require(!history.empty(), "generate_refinement: history is empty");
    require(k >= 1, "generate_refinement: k must be >= 1");
    const int round = history.back().index + 1;

    auto vars = context_vars(ectx);
    vars["history"] = prompts::render_history(history);
    vars["k"] = std::to_string(k);
    auto messages = start_messages(ctx.templates, ctx.templates.render("questions.refine", vars));
    auto attempt = ask_for_questions(messages, ctx);

    std::set<std::string> seen;
    for (const auto& r : history) {
        for (const auto& q : r.questions) {
            seen.insert(text::question_key(q.text));
        }
    }

    QuestionSet out;
    out.repairs = attempt.repairs;
    const auto ids = concept_ids(ectx.concepts);
    for (const auto& parsed : attempt.questions) {
        if (!seen.insert(text::question_key(parsed.text)).second) {
            out.warnings.push_back(fmt::format("dropped duplicate question \"{}\"", parsed.text));
            continue;
        }
        if (static_cast<int>(out.questions.size()) == k) {
            out.truncated = true;
            continue;
        }
        Question q;
        q.id = fmt::format("q{}-{}", round, out.questions.size() + 1);
        q.round = round;
        q.kind = QuestionKind::Refinement;
        q.text = parsed.text;
        q.target_concepts = known_targets(parsed, ids, out.warnings);
        out.questions.push_back(std::move(q));
    }
    if (out.questions.empty()) {
        fail(ErrorCode::NoNewQuestions, fmt::format("round {}: the model proposed no new questions", round));
    }
    return out;
}

} // namespace vice::questions
