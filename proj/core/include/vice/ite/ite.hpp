// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/backend/backend.hpp"
#include "vice/core/types.hpp"
#include "vice/pipeline/pipeline.hpp"
#include "vice/prompts/templates.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vice::ite {

/// Concepts of a targeted edit, split by what the edit must do with them.
/// The three groups are pairwise disjoint by normalized text.
struct ConceptPartition {
    std::vector<VisualConcept> remain;
    std::vector<VisualConcept> remove;
    std::vector<VisualConcept> add;

    [[nodiscard]] std::vector<VisualConcept> all() const;
    bool operator==(const ConceptPartition&) const = default;
};

struct RemainViolation {
    std::string concept_id;
    std::string question_id;
    std::string answer_before;
    std::string answer_after;

    bool operator==(const RemainViolation&) const = default;
};

struct ITEReport {
    ConceptPartition partition;
    Transcript input_transcript;
    Transcript edited_transcript;
    std::vector<RemainViolation> remain_violations;
    std::vector<std::string> removal_failures;
    std::vector<std::string> addition_failures;
    /// Remove/add concepts that no question targeted.
    std::vector<std::string> unchecked_concepts;
    EvaluationScore score;
    TranscriptStatus status = TranscriptStatus::Ok;
    std::optional<StageFailure> failure;

    bool operator==(const ITEReport&) const = default;
};

/// Throws DisjointnessViolation naming the first text found in two groups.
void check_disjoint(const ConceptPartition& p);

/// Parses {"remain": [...], "remove": [...], "add": [...]} from model output.
/// Elements are {"text", "category"} objects or strings. Ids are keep-N,
/// remove-N and add-N. Throws PartitionParseFailure or DisjointnessViolation.
ConceptPartition parse_partition(std::string_view raw);

/// Asks the model for the partition of an edit instruction given the caption
/// of the input image. Unparseable replies are repaired up to
/// ctx.repair_retries times; overlapping groups are not repaired.
ConceptPartition partition_concepts(std::string_view instruction, std::string_view input_caption,
                                    prompts::ReasoningContext& ctx);

/// Concepts expected in the edited image: (remain minus remove) union add,
/// compared by normalized text. Remain order first, then add order.
std::vector<VisualConcept> expected_concepts(const ConceptPartition& p);

/// Whether `answer` affirms the presence of a concept. Yes/no answers decide
/// directly; otherwise the answer affirms when one of its content words
/// appears in the concept text ("red" affirms "red color").
bool affirms(std::string_view answer, std::string_view concept_text);

struct EditFindings {
    std::vector<RemainViolation> remain_violations;
    std::vector<std::string> removal_failures;
    std::vector<std::string> addition_failures;
    std::vector<std::string> unchecked_concepts;
};

/// Applies the detection rules to a question list answered on both images.
/// Questions that also target remove/add concepts are expected to change and
/// are excluded from the remain-invariance check.
EditFindings analyze_edit(const ConceptPartition& p, std::span<const Question> questions,
                          std::span<const Answer> before, std::span<const Answer> after);

/// Paired evaluation of a targeted edit: caption the input image, partition
/// the concepts, generate one question set, ask it of both images, apply the
/// detection rules and request a score over the combined evidence. Stage
/// errors produce a report with status Failed.
ITEReport evaluate_edit(const PromptSpec& prompt, const ImageRef& input_image, const ImageRef& edited_image,
                        const PipelineConfig& cfg, backend::Backends backends,
                        const pipeline::EvalOptions& options = {});

void to_json(nlohmann::json& j, const ConceptPartition& p);
void from_json(const nlohmann::json& j, ConceptPartition& p);
void to_json(nlohmann::json& j, const ITEReport& r);
void from_json(const nlohmann::json& j, ITEReport& r);

} // namespace vice::ite
