// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/backend/backend.hpp"
#include "vice/core/error.hpp"
#include "vice/core/types.hpp"
#include "vice/prompts/templates.hpp"
#include "vice/questions/questions.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vice::pipeline {

/// A stage failure: the original error code plus the stage it happened in.
class StageError : public Error {
public:
    StageError(std::string stage, ErrorCode code, const std::string& message)
        : Error(code, fmt::format("{}: {}", to_string(code), message)), stage_(std::move(stage)) {}

    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Runs named stages, accumulating wall time per stage and tagging any
/// failure with the stage name.
class StageClock {
public:
    explicit StageClock(std::map<std::string, std::int64_t>& timings) : timings_(timings) {}

    template <typename Fn>
    auto run(const std::string& stage, Fn&& fn) -> decltype(fn()) {
        const auto start = std::chrono::steady_clock::now();
        auto record = [&] {
            timings_[stage] += std::chrono::duration_cast<std::chrono::milliseconds>(
                                   std::chrono::steady_clock::now() - start)
                                   .count();
        };
        try {
            if constexpr (std::is_void_v<decltype(fn())>) {
                fn();
                record();
            } else {
                auto result = fn();
                record();
                return result;
            }
        } catch (const StageError&) {
            record();
            throw;
        } catch (const Error& e) {
            record();
            throw StageError(stage, e.code(), e.what());
        } catch (const std::exception& e) {
            record();
            throw StageError(stage, ErrorCode::TransportFailure, e.what());
        }
    }

private:
    std::map<std::string, std::int64_t>& timings_;
};

/// Sends the questions to the vision backend and pairs answers by id.
std::vector<Answer> ask_image(backend::VisionBackend& vision, const ImageRef& image,
                              std::span<const Question> questions, const backend::BackendPolicy& policy);

void note_warnings(Transcript& t, const std::string& key, const std::vector<std::string>& warnings);

/// Decision / refinement cycle shared by generation and edit evaluation.
/// Expects round 0 to be present in `t.rounds`; leaves the last round's
/// decision_after at Stop.
void run_refinement_loop(Transcript& t, StageClock& clock, const questions::EvaluationContext& ectx,
                         const PipelineConfig& cfg, prompts::ReasoningContext& rctx,
                         const std::function<std::vector<Answer>(std::span<const Question>)>& answer);

} // namespace vice::pipeline
