// SPDX-License-Identifier: Apache-2.0
#include "vice/core/types.hpp"

#include "vice/core/error.hpp"
#include "vice/core/text.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace vice {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<std::string_view, E>, N>& table,
                        std::string_view s) {
    for (const auto& [name, value] : table) {
        if (name == s) {
            return value;
        }
    }
    return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<std::string_view, E>, N>& table, E v) {
    for (const auto& [name, value] : table) {
        if (value == v) {
            return name;
        }
    }
    return "?";
}

constexpr std::array<std::pair<std::string_view, TaskKind>, 2> kTasks{{
    {"generation", TaskKind::Generation},
    {"targeted_edit", TaskKind::TargetedEdit},
}};

constexpr std::array<std::pair<std::string_view, ConceptCategory>, 4> kCategories{{
    {"Object", ConceptCategory::Object},
    {"Attribute", ConceptCategory::Attribute},
    {"Relation", ConceptCategory::Relation},
    {"Context", ConceptCategory::Context},
}};

constexpr std::array<std::pair<std::string_view, ConceptOrigin>, 2> kOrigins{{
    {"Explicit", ConceptOrigin::Explicit},
    {"Implicit", ConceptOrigin::Implicit},
}};

constexpr std::array<std::pair<std::string_view, ConceptSource>, 2> kSources{{
    {"prompt", ConceptSource::Prompt},
    {"input_image", ConceptSource::InputImage},
}};

constexpr std::array<std::pair<std::string_view, QuestionKind>, 2> kKinds{{
    {"blind", QuestionKind::Blind},
    {"refinement", QuestionKind::Refinement},
}};

constexpr std::array<std::pair<std::string_view, Decision>, 2> kDecisions{{
    {"refine", Decision::Refine},
    {"stop", Decision::Stop},
}};

constexpr std::array<std::pair<std::string_view, Variant>, 4> kVariants{{
    {"ViCE", Variant::ViCE},
    {"ViCE_5", Variant::ViCE_5},
    {"ViCE_blind", Variant::ViCE_blind},
    {"Custom", Variant::Custom},
}};

constexpr std::array<std::pair<std::string_view, TranscriptStatus>, 2> kStatuses{{
    {"ok", TranscriptStatus::Ok},
    {"failed", TranscriptStatus::Failed},
}};

std::string fold(std::string_view s) {
    std::string out;
    for (char c : text::to_lower(s)) {
        if (c != '_' && c != '-' && c != ' ') {
            out.push_back(c);
        }
    }
    return out;
}

} // namespace

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::TransportFailure: return "TransportFailure";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::ScriptParseError: return "ScriptParseError";
    case ErrorCode::UnscriptedRequest: return "UnscriptedRequest";
    case ErrorCode::ConceptParseFailure: return "ConceptParseFailure";
    case ErrorCode::NoJsonArrayFound: return "NoJsonArrayFound";
    case ErrorCode::ElementMissingText: return "ElementMissingText";
    case ErrorCode::QuestionCountShortfall: return "QuestionCountShortfall";
    case ErrorCode::NoNewQuestions: return "NoNewQuestions";
    case ErrorCode::ScoreParseFailure: return "ScoreParseFailure";
    case ErrorCode::PartitionParseFailure: return "PartitionParseFailure";
    case ErrorCode::DisjointnessViolation: return "DisjointnessViolation";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    }
    return "Unknown";
}

std::string_view to_string(TaskKind v) noexcept { return name_of(kTasks, v); }
std::string_view to_string(ConceptCategory v) noexcept { return name_of(kCategories, v); }
std::string_view to_string(ConceptOrigin v) noexcept { return name_of(kOrigins, v); }
std::string_view to_string(ConceptSource v) noexcept { return name_of(kSources, v); }
std::string_view to_string(QuestionKind v) noexcept { return name_of(kKinds, v); }
std::string_view to_string(Decision v) noexcept { return name_of(kDecisions, v); }
std::string_view to_string(Variant v) noexcept { return name_of(kVariants, v); }
std::string_view to_string(TranscriptStatus v) noexcept { return name_of(kStatuses, v); }

std::optional<TaskKind> task_kind_from(std::string_view s) { return lookup(kTasks, s); }
std::optional<ConceptSource> source_from(std::string_view s) { return lookup(kSources, s); }
std::optional<QuestionKind> question_kind_from(std::string_view s) { return lookup(kKinds, s); }
std::optional<Decision> decision_from(std::string_view s) { return lookup(kDecisions, s); }
std::optional<TranscriptStatus> status_from(std::string_view s) { return lookup(kStatuses, s); }

// Model output is not trusted to match case.
std::optional<ConceptCategory> category_from(std::string_view s) {
    const auto folded = fold(s);
    for (const auto& [name, value] : kCategories) {
        if (fold(name) == folded) {
            return value;
        }
    }
    return std::nullopt;
}

std::optional<ConceptOrigin> origin_from(std::string_view s) {
    const auto folded = fold(s);
    for (const auto& [name, value] : kOrigins) {
        if (fold(name) == folded) {
            return value;
        }
    }
    return std::nullopt;
}

// Accepts the canonical names as well as the CLI spellings vice / vice5 / viceblind.
std::optional<Variant> variant_from(std::string_view s) {
    const auto folded = fold(s);
    for (const auto& [name, value] : kVariants) {
        if (fold(name) == folded) {
            return value;
        }
    }
    return std::nullopt;
}

} // namespace vice
