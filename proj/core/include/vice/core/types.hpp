// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vice {

/// Opaque reference to an image: a filesystem path or a `data:` URI.
/// Pixels are never decoded here; the reference is forwarded to backends.
struct ImageRef {
    std::string uri;

    [[nodiscard]] bool is_data_uri() const noexcept { return uri.starts_with("data:"); }
    [[nodiscard]] bool empty() const noexcept { return uri.empty(); }

    bool operator==(const ImageRef&) const = default;
};

enum class TaskKind { Generation, TargetedEdit };

struct PromptSpec {
    std::string id;
    std::string text;
    std::optional<ImageRef> input_image;
    TaskKind task = TaskKind::Generation;

    bool operator==(const PromptSpec&) const = default;
};

enum class ConceptCategory { Object, Attribute, Relation, Context };
enum class ConceptOrigin { Explicit, Implicit };
/// Where a concept came from: the prompt text or the caption of the input image (edits only).
enum class ConceptSource { Prompt, InputImage };

struct VisualConcept {
    std::string id;
    std::string text;
    ConceptCategory category = ConceptCategory::Object;
    ConceptOrigin origin = ConceptOrigin::Explicit;
    ConceptSource source = ConceptSource::Prompt;
    std::optional<std::string> span;

    bool operator==(const VisualConcept&) const = default;
};

enum class QuestionKind { Blind, Refinement };

struct Question {
    std::string id;
    int round = 0;
    std::string text;
    QuestionKind kind = QuestionKind::Blind;
    std::vector<std::string> target_concepts;

    bool operator==(const Question&) const = default;
};

struct Answer {
    std::string question_id;
    std::string text;
    std::map<std::string, std::string> backend_meta;

    bool operator==(const Answer&) const = default;
};

enum class Decision { Refine, Stop };

struct Round {
    int index = 0;
    std::vector<Question> questions;
    std::vector<Answer> answers;
    Decision decision_after = Decision::Stop;

    bool operator==(const Round&) const = default;
};

enum class Variant { ViCE, ViCE_5, ViCE_blind, Custom };

struct PipelineConfig {
    Variant variant = Variant::ViCE;
    int n_blind = 15;
    int n_refine_per_round = 5;
    int max_refine_rounds = 3;
    bool use_caption = true;
    double temperature = 0.0;
    std::int64_t seed = 0;
    int repair_retries = 1;
    /// Edit evaluation skips the refinement loop unless this is set.
    bool ite_refine = false;

    bool operator==(const PipelineConfig&) const = default;
};

struct EvaluationScore {
    double value = 0.0;
    std::string rationale;
    std::string raw_model_output;
    bool clamped = false;
    int repairs = 0;

    bool operator==(const EvaluationScore&) const = default;
};

enum class TranscriptStatus { Ok, Failed };

struct StageFailure {
    std::string stage;
    std::string message;

    bool operator==(const StageFailure&) const = default;
};

struct Transcript {
    PromptSpec prompt;
    ImageRef image;
    std::optional<std::string> caption;
    std::vector<VisualConcept> concepts;
    std::vector<Round> rounds;
    EvaluationScore score;
    std::string config_fingerprint;
    std::int64_t seed = 0;
    std::map<std::string, std::int64_t> timings;
    TranscriptStatus status = TranscriptStatus::Ok;
    std::optional<StageFailure> failure;
    /// Audit trail: repair counts, clamp/truncation flags, pre-reasoning text.
    std::map<std::string, std::string> metadata;

    bool operator==(const Transcript&) const = default;
};

std::string_view to_string(TaskKind v) noexcept;
std::string_view to_string(ConceptCategory v) noexcept;
std::string_view to_string(ConceptOrigin v) noexcept;
std::string_view to_string(ConceptSource v) noexcept;
std::string_view to_string(QuestionKind v) noexcept;
std::string_view to_string(Decision v) noexcept;
std::string_view to_string(Variant v) noexcept;
std::string_view to_string(TranscriptStatus v) noexcept;

std::optional<TaskKind> task_kind_from(std::string_view s);
std::optional<ConceptCategory> category_from(std::string_view s);
std::optional<ConceptOrigin> origin_from(std::string_view s);
std::optional<ConceptSource> source_from(std::string_view s);
std::optional<QuestionKind> question_kind_from(std::string_view s);
std::optional<Decision> decision_from(std::string_view s);
std::optional<Variant> variant_from(std::string_view s);
std::optional<TranscriptStatus> status_from(std::string_view s);

} // namespace vice
