// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/core/types.hpp"
#include "vice/prompts/templates.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace vice::concepts {

/// Concept lists longer than this are truncated with a warning.
inline constexpr std::size_t kMaxConcepts = 50;

struct ParsedConcepts {
    std::vector<VisualConcept> concepts;
    std::vector<std::string> warnings;
};

/// Extracts the first JSON array in `raw` (surrounding prose and code fences
/// are tolerated) and validates each element. Elements are objects with
/// "text", "category", "origin" and optionally "source" / "span"; bare strings
/// are accepted as text. Unknown categories map to Context and unknown origins
/// to Implicit, each with a warning. Ids are assigned `<prefix>1..n` in order.
///
/// Throws NoJsonArrayFound or ElementMissingText.
ParsedConcepts parse_concept_payload(std::string_view raw, ConceptSource default_source = ConceptSource::Prompt,
                                     std::string_view id_prefix = "c");

/// JSON array text that parse_concept_payload maps back to `concepts`.
std::string serialize_concepts(const std::vector<VisualConcept>& concepts);

struct Extraction {
    std::vector<VisualConcept> concepts;
    /// Free-text answer to the stepwise "what do you expect" turn.
    std::string pre_reasoning;
    int repairs = 0;
    bool truncated = false;
    std::vector<std::string> warnings;
};

/// Two-turn exchange: first what the model expects to see and how the
/// generation should be judged, then the structured concept list. Parse
/// failures (including an empty list) trigger up to ctx.repair_retries repair
/// turns before ConceptParseFailure is raised.
Extraction extract_concepts(const PromptSpec& prompt, prompts::ReasoningContext& ctx);

/// Same protocol for targeted edits; the caption of the input image is part
/// of the first turn and concepts carry their source (instruction or image).
Extraction extract_concepts_ite(const PromptSpec& prompt, std::string_view input_caption,
                                prompts::ReasoningContext& ctx);

} // namespace vice::concepts
