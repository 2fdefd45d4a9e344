// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/backend/backend.hpp"
#include "vice/core/types.hpp"
#include "vice/prompts/templates.hpp"

#include <span>
#include <vector>

namespace vice::pipeline {

/// ViCE: 15 blind questions, up to 3 refinement rounds of 5, caption on.
/// ViCE_5: 5 blind questions, no refinement. ViCE_blind: 15, no refinement.
/// Custom starts from the ViCE numbers.
PipelineConfig preset(Variant variant);

struct EvalOptions {
    /// Timeout / retry settings for every backend call; the temperature is
    /// always taken from the pipeline config.
    backend::BackendPolicy policy;
    const prompts::TemplateSet* templates = &prompts::TemplateSet::builtin();
};

struct Job {
    PromptSpec prompt;
    ImageRef image;
};

/// One full evaluation: caption, concepts, blind questions, answers, the
/// refinement loop, and the final score. Stage errors do not throw; they
/// produce a transcript with status Failed naming the stage, holding whatever
/// was completed. An invalid config or prompt throws InvalidArgument.
///
/// Targeted-edit prompts are evaluated against the edited image with
/// concepts derived from the instruction and the caption of the input image.
Transcript evaluate(const PromptSpec& prompt, const ImageRef& image, const PipelineConfig& cfg,
                    backend::Backends backends, const EvalOptions& options = {});

/// Runs `jobs` on at most `workers` concurrent pipelines. Output order
/// matches input order; a failing job yields a failed transcript and does not
/// affect the others.
std::vector<Transcript> batch_evaluate(std::span<const Job> jobs, const PipelineConfig& cfg,
                                       backend::Backends backends, int workers, const EvalOptions& options = {});

} // namespace vice::pipeline
