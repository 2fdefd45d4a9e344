// SPDX-License-Identifier: Apache-2.0
#include "vice/pipeline/pipeline.hpp"

#include "vice/concepts/concepts.hpp"
#include "vice/core/error.hpp"
#include "vice/core/validate.hpp"
#include "vice/pipeline/stage.hpp"
#include "vice/questions/questions.hpp"
#include "vice/scorer/scorer.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <optional>
#include <thread>

namespace vice::pipeline {

PipelineConfig preset(Variant variant) {
    PipelineConfig cfg;
    cfg.variant = variant;
    switch (variant) {
    case Variant::ViCE:
    case Variant::Custom:
        cfg.n_blind = 15;
        cfg.n_refine_per_round = 5;
        cfg.max_refine_rounds = 3;
        break;
    case Variant::ViCE_5:
        cfg.n_blind = 5;
        cfg.max_refine_rounds = 0;
        break;
    case Variant::ViCE_blind:
        cfg.n_blind = 15;
        cfg.max_refine_rounds = 0;
        break;
    }
    cfg.use_caption = true;
    return cfg;
}

std::vector<Answer> ask_image(backend::VisionBackend& vision, const ImageRef& image,
                              std::span<const Question> questions, const backend::BackendPolicy& policy) {
    std::vector<std::string> texts;
    texts.reserve(questions.size());
    for (const auto& q : questions) {
        texts.push_back(q.text);
    }
    const auto start = std::chrono::steady_clock::now();
    auto replies = vision.vqa(image, texts, policy);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    std::vector<Answer> answers;
    answers.reserve(questions.size());
    for (std::size_t i = 0; i < questions.size(); ++i) {
        answers.push_back({questions[i].id, replies[i], {{"model", vision.name()}, {"latency_ms", std::to_string(ms.count())}}});
    }
    return answers;
}

void note_warnings(Transcript& t, const std::string& key, const std::vector<std::string>& warnings) {
    if (warnings.empty()) {
        return;
    }
    std::string joined;
    for (const auto& w : warnings) {
        if (!joined.empty()) {
            joined += "; ";
        }
        joined += w;
    }
    t.metadata[key] = joined;
}

void run_refinement_loop(Transcript& t, StageClock& clock, const questions::EvaluationContext& ectx,
                         const PipelineConfig& cfg, prompts::ReasoningContext& rctx,
                         const std::function<std::vector<Answer>(std::span<const Question>)>& answer) {
    int refine_done = 0;
    while (true) {
        const int last = t.rounds.back().index;
        auto decision = clock.run(fmt::format("decide/round-{}", last), [&] {
            return questions::decide_refine(ectx, t.rounds, refine_done, cfg.max_refine_rounds, rctx);
        });
        if (decision.consulted_model) {
            t.metadata[fmt::format("decision.round-{}", last)] = std::string(to_string(decision.decision));
        }
        if (decision.fail_closed) {
            t.metadata[fmt::format("decision.round-{}.fail_closed", last)] = "true";
        }
        if (decision.decision == Decision::Stop) {
            t.rounds.back().decision_after = Decision::Stop;
            return;
        }
        const int next = last + 1;
        std::optional<questions::QuestionSet> set;
        try {
            set = clock.run(fmt::format("questions/round-{}", next), [&] {
                return questions::generate_refinement(ectx, t.rounds, cfg.n_refine_per_round, rctx);
            });
        } catch (const StageError& e) {
            if (e.code() != ErrorCode::NoNewQuestions) {
                throw;
            }
            t.metadata[fmt::format("questions.round-{}", next)] = "no new questions";
            t.rounds.back().decision_after = Decision::Stop;
            return;
        }
        note_warnings(t, fmt::format("questions.round-{}.warnings", next), set->warnings);
        t.rounds.back().decision_after = Decision::Refine;
        Round round{next, std::move(set->questions), {}, Decision::Stop};
        round.answers = clock.run(fmt::format("vqa/round-{}", next), [&] { return answer(round.questions); });
        t.rounds.push_back(std::move(round));
        ++refine_done;
    }
}

Transcript evaluate(const PromptSpec& prompt, const ImageRef& image, const PipelineConfig& cfg,
                    backend::Backends backends, const EvalOptions& options) {
    if (auto v = validate_config(cfg); !v.empty()) {
        fail(ErrorCode::InvalidArgument, "invalid pipeline config: " + v.front());
    }
    if (auto v = validate_prompt(prompt); !v.empty()) {
        fail(ErrorCode::InvalidArgument, fmt::format("invalid prompt '{}': {}", prompt.id, v.front()));
    }
    require(!image.empty(), "evaluate: image reference is empty");

    const auto& templates = *options.templates;
    auto policy = options.policy;
    policy.temperature = cfg.temperature;

    Transcript t;
    t.prompt = prompt;
    t.image = image;
    t.seed = cfg.seed;
    t.config_fingerprint = fingerprint_config(cfg, templates.version());
    t.metadata["variant"] = std::string(to_string(cfg.variant));
    t.metadata["template_set_version"] = templates.version();

    prompts::ReasoningContext rctx{backends.reasoning, policy, templates, cfg.repair_retries};
    StageClock clock(t.timings);

    try {
        if (cfg.use_caption) {
            t.caption = clock.run("caption", [&] { return backends.vision.caption(image, policy); });
        }

        concepts::Extraction extraction;
        if (prompt.task == TaskKind::TargetedEdit) {
            auto input_caption =
                clock.run("caption/input", [&] { return backends.vision.caption(*prompt.input_image, policy); });
            t.metadata["input_caption"] = input_caption;
            extraction = clock.run("concepts", [&] { return concepts::extract_concepts_ite(prompt, input_caption, rctx); });
        } else {
            extraction = clock.run("concepts", [&] { return concepts::extract_concepts(prompt, rctx); });
        }
        t.concepts = std::move(extraction.concepts);
        t.metadata["concepts.pre_reasoning"] = extraction.pre_reasoning;
        t.metadata["concepts.repairs"] = std::to_string(extraction.repairs);
        if (extraction.truncated) {
            t.metadata["concepts.truncated"] = "true";
        }
        note_warnings(t, "concepts.warnings", extraction.warnings);

        questions::EvaluationContext ectx{prompt, t.caption, t.concepts};
        auto blind = clock.run("questions/blind", [&] { return questions::generate_blind(ectx, cfg.n_blind, rctx); });
        t.metadata["questions.blind.repairs"] = std::to_string(blind.repairs);
        if (blind.truncated) {
            t.metadata["questions.blind.truncated"] = "true";
        }
        note_warnings(t, "questions.blind.warnings", blind.warnings);

        auto answer = [&](std::span<const Question> qs) { return ask_image(backends.vision, image, qs, policy); };

        Round round0{0, std::move(blind.questions), {}, Decision::Stop};
        round0.answers = clock.run("vqa/round-0", [&] { return answer(round0.questions); });
        t.rounds.push_back(std::move(round0));

        run_refinement_loop(t, clock, ectx, cfg, rctx, answer);

        t.score = clock.run("score", [&] { return scorer::request_score(ectx, t.rounds, rctx); });
    } catch (const StageError& e) {
        spdlog::warn("evaluation '{}' failed at {}: {}", prompt.id, e.stage(), e.what());
        t.status = TranscriptStatus::Failed;
        t.failure = StageFailure{e.stage(), e.what()};
    }
    return t;
}

std::vector<Transcript> batch_evaluate(std::span<const Job> jobs, const PipelineConfig& cfg,
                                       backend::Backends backends, int workers, const EvalOptions& options) {
    require(workers >= 1, fmt::format("batch_evaluate: workers must be >= 1, got {}", workers));
    if (auto v = validate_config(cfg); !v.empty()) {
        fail(ErrorCode::InvalidArgument, "invalid pipeline config: " + v.front());
    }

    std::vector<std::optional<Transcript>> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
            const auto& job = jobs[i];
            try {
                results[i] = evaluate(job.prompt, job.image, cfg, backends, options);
            } catch (const std::exception& e) {
                Transcript t;
                t.prompt = job.prompt;
                t.image = job.image;
                t.seed = cfg.seed;
                t.config_fingerprint = fingerprint_config(cfg, options.templates->version());
                t.status = TranscriptStatus::Failed;
                t.failure = StageFailure{"precondition", e.what()};
                results[i] = std::move(t);
            }
        }
    };

    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(workers), jobs.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t i = 0; i < n_threads; ++i) {
            pool.emplace_back(worker);
        }
    }

    std::vector<Transcript> out;
    out.reserve(jobs.size());
    for (auto& r : results) {
        out.push_back(std::move(*r));
    }
    return out;
}

} // namespace vice::pipeline
