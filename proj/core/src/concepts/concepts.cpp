// SPDX-License-Identifier: Apache-2.0
#include "vice/concepts/concepts.hpp"

#include "vice/core/error.hpp"
#include "vice/core/json_util.hpp"
#include "vice/core/text.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace vice::concepts {

using nlohmann::json;
using backend::ChatMessage;
using backend::Role;

ParsedConcepts parse_concept_payload(std::string_view raw, ConceptSource default_source, std::string_view id_prefix) {
    auto array = json_util::first_array(raw);
    if (!array) {
        fail(ErrorCode::NoJsonArrayFound, "no JSON array found in concept payload");
    }
    ParsedConcepts out;
    std::size_t n = 0;
    for (const auto& element : *array) {
        ++n;
        VisualConcept c;
        c.id = fmt::format("{}{}", id_prefix, n);
        c.source = default_source;
        if (element.is_string()) {
            c.text = text::trim(element.get<std::string>());
            c.category = ConceptCategory::Context;
            c.origin = ConceptOrigin::Implicit;
            out.warnings.push_back(fmt::format("concept {} given as a bare string", n));
        } else if (element.is_object()) {
            auto t = element.find("text");
            if (t == element.end() || !t->is_string()) {
                fail(ErrorCode::ElementMissingText, fmt::format("concept element {} has no \"text\"", n));
            }
            c.text = text::trim(t->get<std::string>());
            const auto category = element.value("category", std::string{});
            if (auto parsed = category_from(category)) {
                c.category = *parsed;
            } else {
                c.category = ConceptCategory::Context;
                out.warnings.push_back(fmt::format("concept {} has unknown category '{}', using Context", n, category));
            }
            const auto origin = element.value("origin", std::string{});
            if (auto parsed = origin_from(origin)) {
                c.origin = *parsed;
            } else {
                c.origin = ConceptOrigin::Implicit;
                out.warnings.push_back(fmt::format("concept {} has unknown origin '{}', using Implicit", n, origin));
            }
            if (auto s = element.find("source"); s != element.end() && s->is_string()) {
                if (auto parsed = source_from(text::to_lower(s->get<std::string>()))) {
                    c.source = *parsed;
                }
            }
            if (auto s = element.find("span"); s != element.end() && s->is_string()) {
                c.span = s->get<std::string>();
            }
        } else {
            fail(ErrorCode::ElementMissingText, fmt::format("concept element {} is neither an object nor a string", n));
        }
        if (c.text.empty()) {
            fail(ErrorCode::ElementMissingText, fmt::format("concept element {} has empty \"text\"", n));
        }
        out.concepts.push_back(std::move(c));
    }
    return out;
}

std::string serialize_concepts(const std::vector<VisualConcept>& concepts) {
    auto arr = json::array();
    for (const auto& c : concepts) {
        json j{{"text", c.text},
               {"category", to_string(c.category)},
               {"origin", to_string(c.origin)},
               {"source", to_string(c.source)}};
        if (c.span) {
            j["span"] = *c.span;
        }
        arr.push_back(std::move(j));
    }
    return arr.dump();
}

namespace {

Extraction run_protocol(std::string first_turn, std::string_view list_template, ConceptSource default_source,
                        prompts::ReasoningContext& ctx) {
    const auto& tpl = ctx.templates;
    std::vector<ChatMessage> messages{
        {Role::System, tpl.render("system", {})},
        {Role::User, std::move(first_turn)},
    };
    Extraction out;
    out.pre_reasoning = ctx.backend.complete(messages, ctx.policy);
    messages.push_back({Role::Assistant, out.pre_reasoning});
    messages.push_back({Role::User, tpl.render(list_template, {})});

    std::string last_error;
    for (int attempt = 0; attempt <= ctx.repair_retries; ++attempt) {
        if (attempt > 0) {
            messages.push_back({Role::User, tpl.render("repair.json_array", {})});
        }
        auto reply = ctx.backend.complete(messages, ctx.policy);
        try {
            auto parsed = parse_concept_payload(reply, default_source);
            if (parsed.concepts.empty()) {
                fail(ErrorCode::ConceptParseFailure, "concept list is empty");
            }
            out.concepts = std::move(parsed.concepts);
            out.warnings = std::move(parsed.warnings);
            out.repairs = attempt;
            if (out.concepts.size() > kMaxConcepts) {
                spdlog::warn("truncating {} concepts to {}", out.concepts.size(), kMaxConcepts);
                out.warnings.push_back(fmt::format("truncated {} concepts to {}", out.concepts.size(), kMaxConcepts));
                out.concepts.resize(kMaxConcepts);
                out.truncated = true;
            }
            return out;
        } catch (const Error& e) {
            last_error = e.what();
        }
        messages.push_back({Role::Assistant, reply.empty() ? std::string("(empty reply)") : reply});
    }
    fail(ErrorCode::ConceptParseFailure,
         fmt::format("concept extraction failed after {} repair(s): {}", ctx.repair_retries, last_error));
}

} // namespace

Extraction extract_concepts(const PromptSpec& prompt, prompts::ReasoningContext& ctx) {
    require(prompt.task == TaskKind::Generation, "extract_concepts: prompt is not a generation task");
    require(!text::trim(prompt.text).empty(), "extract_concepts: prompt text is empty");
    auto first = ctx.templates.render("concepts.expect", {{"prompt", prompt.text}});
    return run_protocol(std::move(first), "concepts.list", ConceptSource::Prompt, ctx);
}

Extraction extract_concepts_ite(const PromptSpec& prompt, std::string_view input_caption,
                                prompts::ReasoningContext& ctx) {
    require(prompt.task == TaskKind::TargetedEdit, "extract_concepts_ite: prompt is not a targeted edit");
    require(!text::trim(prompt.text).empty(), "extract_concepts_ite: instruction is empty");
    require(!text::trim(input_caption).empty(), "extract_concepts_ite: input caption is empty");
    auto first = ctx.templates.render("concepts.expect_edit",
                                      {{"prompt", prompt.text}, {"input_caption", std::string(input_caption)}});
    return run_protocol(std::move(first), "concepts.list_edit", ConceptSource::Prompt, ctx);
}

} // namespace vice::concepts
