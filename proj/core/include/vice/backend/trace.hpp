// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/backend/backend.hpp"

#include <mutex>
#include <string>
#include <vector>

namespace vice::backend {

struct CallRecord {
    std::string role;   // "reasoning" | "vision"
    std::string op;     // "complete" | "caption" | "vqa"
    std::string detail; // first line of the last user message, or the image reference
    std::string digest; // reasoning requests only
};

/// Append-only, thread-safe log of backend calls in issue order.
class CallLog {
public:
    void append(CallRecord record);
    [[nodiscard]] std::vector<CallRecord> records() const;

private:
    mutable std::mutex mutex_;
    std::vector<CallRecord> records_;
};

class TracingReasoning final : public ReasoningBackend {
public:
    TracingReasoning(ReasoningBackend& inner, CallLog& log) : inner_(inner), log_(log) {}
    [[nodiscard]] std::string name() const override { return inner_.name(); }

    /// Full rendered request contents, indexed like CallLog records of role "reasoning".
    [[nodiscard]] std::vector<std::vector<ChatMessage>> requests() const;

protected:
    std::string do_complete(std::span<const ChatMessage> messages, const BackendPolicy& policy) override;

private:
    ReasoningBackend& inner_;
    CallLog& log_;
    mutable std::mutex mutex_;
    std::vector<std::vector<ChatMessage>> requests_;
};

class TracingVision final : public VisionBackend {
public:
    TracingVision(VisionBackend& inner, CallLog& log) : inner_(inner), log_(log) {}
    [[nodiscard]] bool resolvable(const ImageRef& image) const override { return inner_.resolvable(image); }
    [[nodiscard]] std::string name() const override { return inner_.name(); }

    /// Every question list sent to vqa, with the image it was sent for.
    [[nodiscard]] std::vector<std::pair<std::string, std::vector<std::string>>> vqa_requests() const;

protected:
    std::string do_caption(const ImageRef& image, const BackendPolicy& policy) override;
    std::vector<std::string> do_vqa(const ImageRef& image, std::span<const std::string> questions,
                                    const BackendPolicy& policy) override;

private:
    VisionBackend& inner_;
    CallLog& log_;
    mutable std::mutex mutex_;
    std::vector<std::pair<std::string, std::vector<std::string>>> vqa_requests_;
};

} // namespace vice::backend
