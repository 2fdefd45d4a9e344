// SPDX-License-Identifier: Apache-2.0
#include "vice/ite/ite.hpp"

#include "vice/core/error.hpp"
#include "vice/core/json_util.hpp"
#include "vice/core/text.hpp"
#include "vice/core/transcript_io.hpp"
#include "vice/core/validate.hpp"
#include "vice/pipeline/stage.hpp"
#include "vice/questions/questions.hpp"
#include "vice/scorer/scorer.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <map>
#include <set>

namespace vice::ite {

using backend::ChatMessage;
using backend::Role;
using nlohmann::json;

std::vector<VisualConcept> ConceptPartition::all() const {
    std::vector<VisualConcept> out;
    out.reserve(remain.size() + remove.size() + add.size());
    out.insert(out.end(), remain.begin(), remain.end());
    out.insert(out.end(), remove.begin(), remove.end());
    out.insert(out.end(), add.begin(), add.end());
    return out;
}

void check_disjoint(const ConceptPartition& p) {
    std::map<std::string, std::string> seen;
    auto visit = [&](const std::vector<VisualConcept>& group, const char* name) {
        std::set<std::string> local;
        for (const auto& c : group) {
            auto key = text::normalize(c.text);
            if (!local.insert(key).second) {
                continue;
            }
            auto [it, fresh] = seen.emplace(key, name);
            if (!fresh) {
                fail(ErrorCode::DisjointnessViolation,
                     fmt::format("concept '{}' appears in both '{}' and '{}'", c.text, it->second, name));
            }
        }
    };
    visit(p.remain, "remain");
    visit(p.remove, "remove");
    visit(p.add, "add");
}

namespace {

std::vector<VisualConcept> parse_group(const json& obj, const char* key, const char* id_prefix,
                                       ConceptOrigin origin, ConceptSource source) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) {
        fail(ErrorCode::PartitionParseFailure, fmt::format("partition lacks a \"{}\" array", key));
    }
    std::vector<VisualConcept> out;
    std::size_t n = 0;
    for (const auto& element : *it) {
        ++n;
        VisualConcept c;
        c.id = fmt::format("{}-{}", id_prefix, n);
        c.origin = origin;
        c.source = source;
        c.category = ConceptCategory::Context;
        if (element.is_string()) {
            c.text = text::trim(element.get<std::string>());
        } else if (element.is_object() && element.contains("text") && element["text"].is_string()) {
            c.text = text::trim(element["text"].get<std::string>());
            if (auto cat = category_from(element.value("category", std::string{}))) {
                c.category = *cat;
            }
        } else {
            fail(ErrorCode::PartitionParseFailure, fmt::format("\"{}\" element {} has no text", key, n));
        }
        if (c.text.empty()) {
            fail(ErrorCode::PartitionParseFailure, fmt::format("\"{}\" element {} has empty text", key, n));
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::string render_partition(const ConceptPartition& p) {
    std::string out;
    auto emit = [&](const std::vector<VisualConcept>& group, const char* label) {
        for (const auto& c : group) {
            out += fmt::format("- {} [{}, {}] {}\n", c.id, label, to_string(c.category), c.text);
        }
    };
    emit(p.remain, "remain");
    emit(p.remove, "remove");
    emit(p.add, "add");
    return out;
}

std::string render_paired_history(std::span<const Round> input_rounds, std::span<const Round> edited_rounds) {
    std::string out;
    for (std::size_t r = 0; r < edited_rounds.size(); ++r) {
        const auto& edited = edited_rounds[r];
        out += fmt::format("Round {}:\n", edited.index);
        for (std::size_t i = 0; i < edited.questions.size(); ++i) {
            const auto& q = edited.questions[i];
            const auto& before = input_rounds[r].answers[i].text;
            const auto& after = edited.answers[i].text;
            out += fmt::format("- [{}] {} -> original: {} | edited: {}\n", q.id, q.text, before, after);
        }
    }
    return out;
}

bool is_stopword(const std::string& w) {
    static const std::set<std::string> kStop{"a",  "an", "the", "is",  "it",  "of",    "in",
                                             "on", "with", "and", "one", "color", "colour"};
    return kStop.contains(w);
}

} // namespace

ConceptPartition parse_partition(std::string_view raw) {
    auto obj = json_util::first_object(raw);
    if (!obj) {
        fail(ErrorCode::PartitionParseFailure, "no JSON object found in partition payload");
    }
    ConceptPartition p;
    p.remain = parse_group(*obj, "remain", "keep", ConceptOrigin::Implicit, ConceptSource::InputImage);
    p.remove = parse_group(*obj, "remove", "remove", ConceptOrigin::Explicit, ConceptSource::InputImage);
    p.add = parse_group(*obj, "add", "add", ConceptOrigin::Explicit, ConceptSource::Prompt);
    if (p.remain.empty() && p.remove.empty() && p.add.empty()) {
        fail(ErrorCode::PartitionParseFailure, "partition has no concepts");
    }
    check_disjoint(p);
    return p;
}

ConceptPartition partition_concepts(std::string_view instruction, std::string_view input_caption,
                                    prompts::ReasoningContext& ctx) {
    require(!text::trim(instruction).empty(), "partition_concepts: instruction is empty");
    require(!text::trim(input_caption).empty(), "partition_concepts: input caption is empty");
    std::vector<ChatMessage> messages{
        {Role::System, ctx.templates.render("system", {})},
        {Role::User, ctx.templates.render("ite.partition", {{"instruction", std::string(instruction)},
                                                            {"input_caption", std::string(input_caption)}})},
    };
    std::string last_error;
    for (int attempt = 0; attempt <= ctx.repair_retries; ++attempt) {
        if (attempt > 0) {
            messages.push_back({Role::User, ctx.templates.render("repair.partition", {})});
        }
        auto reply = ctx.backend.complete(messages, ctx.policy);
        try {
            return parse_partition(reply);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::PartitionParseFailure) {
                throw;
            }
            last_error = e.what();
        }
        messages.push_back({Role::Assistant, reply.empty() ? std::string("(empty reply)") : reply});
    }
    fail(ErrorCode::PartitionParseFailure,
         fmt::format("partition failed after {} repair(s): {}", ctx.repair_retries, last_error));
}

std::vector<VisualConcept> expected_concepts(const ConceptPartition& p) {
    std::set<std::string> removed;
    for (const auto& c : p.remove) {
        removed.insert(text::normalize(c.text));
    }
    std::set<std::string> seen;
    std::vector<VisualConcept> out;
    for (const auto& c : p.remain) {
        auto key = text::normalize(c.text);
        if (!removed.contains(key) && seen.insert(key).second) {
            out.push_back(c);
        }
    }
    for (const auto& c : p.add) {
        if (seen.insert(text::normalize(c.text)).second) {
            out.push_back(c);
        }
    }
    return out;
}

bool affirms(std::string_view answer, std::string_view concept_text) {
    if (text::starts_with_yes(answer)) {
        return true;
    }
    if (text::starts_with_no(answer)) {
        return false;
    }
    auto concept_words = text::words(concept_text);
    std::set<std::string> wanted(concept_words.begin(), concept_words.end());
    for (const auto& w : text::words(answer)) {
        if (!is_stopword(w) && wanted.contains(w)) {
            return true;
        }
    }
    return false;
}

EditFindings analyze_edit(const ConceptPartition& p, std::span<const Question> questions,
                          std::span<const Answer> before, std::span<const Answer> after) {
    require(before.size() == questions.size() && after.size() == questions.size(),
            fmt::format("analyze_edit: {} questions, {} original and {} edited answers", questions.size(),
                        before.size(), after.size()));

    std::map<std::string, const VisualConcept*> remain, remove, add;
    for (const auto& c : p.remain) remain[c.id] = &c;
    for (const auto& c : p.remove) remove[c.id] = &c;
    for (const auto& c : p.add) add[c.id] = &c;

    EditFindings out;
    std::set<std::string> removal_failed, addition_failed, checked;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const auto& q = questions[i];
        const bool expects_change = std::any_of(q.target_concepts.begin(), q.target_concepts.end(), [&](auto& id) {
            return remove.contains(id) || add.contains(id);
        });
        for (const auto& id : q.target_concepts) {
            if (remain.contains(id) && !expects_change &&
                text::normalize_answer(before[i].text) != text::normalize_answer(after[i].text)) {
                out.remain_violations.push_back({id, q.id, before[i].text, after[i].text});
            }
            if (auto it = remove.find(id); it != remove.end()) {
                checked.insert(id);
                if (affirms(after[i].text, it->second->text) && removal_failed.insert(id).second) {
                    out.removal_failures.push_back(id);
                }
            }
            if (auto it = add.find(id); it != add.end()) {
                checked.insert(id);
                if (!affirms(after[i].text, it->second->text) && addition_failed.insert(id).second) {
                    out.addition_failures.push_back(id);
                }
            }
        }
    }
    for (const auto* group : {&p.remove, &p.add}) {
        for (const auto& c : *group) {
            if (!checked.contains(c.id)) {
                out.unchecked_concepts.push_back(c.id);
            }
        }
    }
    return out;
}

ITEReport evaluate_edit(const PromptSpec& prompt, const ImageRef& input_image, const ImageRef& edited_image,
                        const PipelineConfig& cfg, backend::Backends backends, const pipeline::EvalOptions& options) {
    if (auto v = validate_config(cfg); !v.empty()) {
        fail(ErrorCode::InvalidArgument, "invalid pipeline config: " + v.front());
    }
    require(!text::trim(prompt.text).empty(), "evaluate_edit: instruction is empty");
    require(!input_image.empty(), "evaluate_edit: input image reference is empty");
    require(!edited_image.empty(), "evaluate_edit: edited image reference is empty");

    const auto& templates = *options.templates;
    auto policy = options.policy;
    policy.temperature = cfg.temperature;

    PromptSpec spec = prompt;
    spec.task = TaskKind::TargetedEdit;
    spec.input_image = input_image;

    ITEReport report;
    Transcript& edited = report.edited_transcript;
    edited.prompt = spec;
    edited.image = edited_image;
    edited.seed = cfg.seed;
    edited.config_fingerprint = fingerprint_config(cfg, templates.version());
    edited.metadata["variant"] = std::string(to_string(cfg.variant));
    edited.metadata["template_set_version"] = templates.version();
    edited.metadata["role"] = "edited";

    prompts::ReasoningContext rctx{backends.reasoning, policy, templates, cfg.repair_retries};
    pipeline::StageClock clock(edited.timings);
    std::vector<Round> input_rounds;

    try {
        auto input_caption = clock.run("caption/input", [&] { return backends.vision.caption(input_image, policy); });
        edited.caption = input_caption;

        report.partition = clock.run("partition", [&] {
            return partition_concepts(spec.text, input_caption, rctx);
        });
        edited.concepts = report.partition.all();

        auto request = templates.render("ite.questions", {{"instruction", spec.text},
                                                          {"input_caption", input_caption},
                                                          {"concepts", render_partition(report.partition)},
                                                          {"n", std::to_string(cfg.n_blind)}});
        auto set = clock.run("questions/edit", [&] {
            return questions::request_exact(std::move(request), cfg.n_blind, edited.concepts, rctx);
        });
        edited.metadata["questions.edit.repairs"] = std::to_string(set.repairs);
        pipeline::note_warnings(edited, "questions.edit.warnings", set.warnings);

        Round round0{0, std::move(set.questions), {}, Decision::Stop};
        Round input0 = round0;
        input0.answers = clock.run("vqa/input/round-0", [&] {
            return pipeline::ask_image(backends.vision, input_image, input0.questions, policy);
        });
        round0.answers = clock.run("vqa/edited/round-0", [&] {
            return pipeline::ask_image(backends.vision, edited_image, round0.questions, policy);
        });
        input_rounds.push_back(std::move(input0));
        edited.rounds.push_back(std::move(round0));

        if (cfg.ite_refine) {
            questions::EvaluationContext ectx{spec, edited.caption, edited.concepts};
            auto answer = [&](std::span<const Question> qs) {
                Round in{static_cast<int>(input_rounds.size()), {qs.begin(), qs.end()}, {}, Decision::Stop};
                in.answers = pipeline::ask_image(backends.vision, input_image, qs, policy);
                input_rounds.push_back(std::move(in));
                return pipeline::ask_image(backends.vision, edited_image, qs, policy);
            };
            pipeline::run_refinement_loop(edited, clock, ectx, cfg, rctx, answer);
            for (std::size_t i = 0; i < input_rounds.size(); ++i) {
                input_rounds[i].index = edited.rounds[i].index;
                input_rounds[i].decision_after = edited.rounds[i].decision_after;
            }
        }

        std::vector<Question> all_questions;
        std::vector<Answer> before, after;
        for (std::size_t r = 0; r < edited.rounds.size(); ++r) {
            const auto& e = edited.rounds[r];
            all_questions.insert(all_questions.end(), e.questions.begin(), e.questions.end());
            after.insert(after.end(), e.answers.begin(), e.answers.end());
            before.insert(before.end(), input_rounds[r].answers.begin(), input_rounds[r].answers.end());
        }
        auto findings = analyze_edit(report.partition, all_questions, before, after);
        report.remain_violations = std::move(findings.remain_violations);
        report.removal_failures = std::move(findings.removal_failures);
        report.addition_failures = std::move(findings.addition_failures);
        report.unchecked_concepts = std::move(findings.unchecked_concepts);

        auto score_request = templates.render(
            "ite.score", {{"instruction", spec.text},
                          {"input_caption", input_caption},
                          {"concepts", render_partition(report.partition)},
                          {"history", render_paired_history(input_rounds, edited.rounds)},
                          {"remain_violations", std::to_string(report.remain_violations.size())},
                          {"removal_failures", std::to_string(report.removal_failures.size())},
                          {"addition_failures", std::to_string(report.addition_failures.size())}});
        report.score = clock.run("score", [&] { return scorer::score_with(std::move(score_request), rctx); });
        edited.score = report.score;
    } catch (const pipeline::StageError& e) {
        spdlog::warn("edit evaluation '{}' failed at {}: {}", spec.id, e.stage(), e.what());
        report.status = TranscriptStatus::Failed;
        report.failure = StageFailure{e.stage(), e.what()};
        edited.status = TranscriptStatus::Failed;
        edited.failure = report.failure;
    }

    Transcript& input = report.input_transcript;
    input = edited;
    input.image = input_image;
    input.rounds = std::move(input_rounds);
    input.timings.clear();
    input.metadata["role"] = "input";
    return report;
}

void to_json(json& j, const ConceptPartition& p) {
    j = json{{"remain", p.remain}, {"remove", p.remove}, {"add", p.add}};
}

void from_json(const json& j, ConceptPartition& p) {
    p.remain = j.at("remain").get<std::vector<VisualConcept>>();
    p.remove = j.at("remove").get<std::vector<VisualConcept>>();
    p.add = j.at("add").get<std::vector<VisualConcept>>();
}

void to_json(json& j, const ITEReport& r) {
    auto violations = json::array();
    for (const auto& v : r.remain_violations) {
        violations.push_back({{"concept_id", v.concept_id},
                              {"question_id", v.question_id},
                              {"answer_before", v.answer_before},
                              {"answer_after", v.answer_after}});
    }
    j = json{{"partition", r.partition},
             {"input_transcript", r.input_transcript},
             {"edited_transcript", r.edited_transcript},
             {"remain_violations", std::move(violations)},
             {"removal_failures", r.removal_failures},
             {"addition_failures", r.addition_failures},
             {"unchecked_concepts", r.unchecked_concepts},
             {"score", r.score},
             {"status", to_string(r.status)},
             {"failure", nullptr}};
    if (r.failure) {
        j["failure"] = {{"stage", r.failure->stage}, {"message", r.failure->message}};
    }
}

void from_json(const json& j, ITEReport& r) {
    r.partition = j.at("partition").get<ConceptPartition>();
    r.input_transcript = j.at("input_transcript").get<Transcript>();
    r.edited_transcript = j.at("edited_transcript").get<Transcript>();
    r.remain_violations.clear();
    for (const auto& v : j.at("remain_violations")) {
        r.remain_violations.push_back({v.at("concept_id").get<std::string>(), v.at("question_id").get<std::string>(),
                                       v.at("answer_before").get<std::string>(),
                                       v.at("answer_after").get<std::string>()});
    }
    r.removal_failures = j.at("removal_failures").get<std::vector<std::string>>();
    r.addition_failures = j.at("addition_failures").get<std::vector<std::string>>();
    r.unchecked_concepts = j.value("unchecked_concepts", std::vector<std::string>{});
    r.score = j.at("score").get<EvaluationScore>();
    auto status = status_from(j.value("status", std::string("ok")));
    if (!status) {
        fail(ErrorCode::SchemaError, "ITE report: unknown status");
    }
    r.status = *status;
    r.failure.reset();
    if (auto f = j.find("failure"); f != j.end() && f->is_object()) {
        r.failure = StageFailure{f->at("stage").get<std::string>(), f->at("message").get<std::string>()};
    }
}

} // namespace vice::ite
