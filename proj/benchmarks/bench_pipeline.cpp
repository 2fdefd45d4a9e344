// SPDX-License-Identifier: Apache-2.0
#include "vice/backend/backend.hpp"
#include "vice/core/error.hpp"
#include "vice/pipeline/pipeline.hpp"
#include "vice/scorer/scorer.hpp"

#include <benchmark/benchmark.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <atomic>

namespace {

using namespace vice;

// Replies by task header; asks for one refinement round, then stops.
class CannedReasoning final : public backend::ReasoningBackend {
public:
    [[nodiscard]] std::string name() const override { return "canned"; }

protected:
    std::string do_complete(std::span<const backend::ChatMessage> messages, const backend::BackendPolicy&) override {
        const auto& msg = messages.back().content;
        const auto header = msg.substr(0, msg.find('\n'));
        auto numbered = [&](std::string_view marker, int round) {
            int n = std::stoi(msg.substr(msg.find(marker) + marker.size()));
            nlohmann::json arr = nlohmann::json::array();
            for (int i = 0; i < n; ++i) {
                arr.push_back({{"text", fmt::format("Question {} of round {}?", i, round)},
                               {"target_concept_ids", {"c1"}}});
            }
            return arr.dump();
        };
        if (header == "Task: expectations") return "A cat sitting on a staircase with its tail visible.";
        if (header == "Task: visual concepts")
            return R"([{"text": "cat", "category": "Object", "origin": "Explicit"},
                       {"text": "stairs", "category": "Object", "origin": "Explicit"}])";
        if (header == "Task: blind questions") return numbered("exactly ", 0);
        if (header == "Task: refinement decision") return msg.find("Round 1") == std::string::npos ? "Yes" : "No";
        if (header == "Task: refinement questions") return numbered("up to ", 1);
        if (header == "Task: final score") return "SCORE: 7\nMostly matches.";
        fail(ErrorCode::UnscriptedRequest, header);
    }
};

class YesVision final : public backend::VisionBackend {
public:
    [[nodiscard]] std::string name() const override { return "yes"; }
    [[nodiscard]] bool resolvable(const ImageRef&) const override { return true; }

protected:
    std::string do_caption(const ImageRef&, const backend::BackendPolicy&) override { return "a cat on stairs"; }
    std::vector<std::string> do_vqa(const ImageRef&, std::span<const std::string> qs,
                                    const backend::BackendPolicy&) override {
        return std::vector<std::string>(qs.size(), "yes");
    }
};

void BM_EvaluateOne(benchmark::State& state) {
    CannedReasoning reasoning;
    YesVision vision;
    auto cfg = pipeline::preset(static_cast<Variant>(state.range(0)));
    PromptSpec prompt{"p", "a cat on the stairs", std::nullopt, TaskKind::Generation};
    for (auto _ : state) {
        benchmark::DoNotOptimize(pipeline::evaluate(prompt, ImageRef{"cat.png"}, cfg, {reasoning, vision}));
    }
}
BENCHMARK(BM_EvaluateOne)
    ->Arg(static_cast<int>(Variant::ViCE))
    ->Arg(static_cast<int>(Variant::ViCE_5))
    ->Arg(static_cast<int>(Variant::ViCE_blind));

void BM_Batch(benchmark::State& state) {
    CannedReasoning reasoning;
    YesVision vision;
    std::vector<pipeline::Job> jobs;
    for (int i = 0; i < 100; ++i) {
        jobs.push_back({{fmt::format("job-{}", i), "a cat on the stairs", std::nullopt, TaskKind::Generation},
                        ImageRef{"cat.png"}});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(pipeline::batch_evaluate(jobs, pipeline::preset(Variant::ViCE), {reasoning, vision},
                                                          static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_Batch)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_ParseScore(benchmark::State& state) {
    const std::string reply = "The image shows a cat on a staircase, tail hidden.\n**Score:** 7.5\nMostly matches.";
    for (auto _ : state) {
        benchmark::DoNotOptimize(scorer::parse_score(reply));
    }
}
BENCHMARK(BM_ParseScore);

} // namespace
