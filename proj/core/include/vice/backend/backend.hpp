// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/core/types.hpp"

#include <chrono>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vice::backend {

enum class Role { System, User, Assistant };

std::string_view to_string(Role r) noexcept;

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct BackendPolicy {
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 2;
    std::chrono::milliseconds backoff_base{500};
    double temperature = 0.0;
};

/// Normalized digest of a reasoning request: roles, contents (CRLF folded,
/// trailing whitespace stripped per line) and temperature. Model name is
/// deliberately excluded so fixtures survive model swaps but not template edits.
std::string request_digest(std::span<const ChatMessage> messages, double temperature);

/// The Reasoning Model role: a chat-completion endpoint.
class ReasoningBackend {
public:
    virtual ~ReasoningBackend() = default;

    /// Validates the request (non-empty list, non-empty contents, timeout > 0)
    /// and forwards it. Throws vice::Error with Timeout, TransportFailure,
    /// MalformedResponse, UnscriptedRequest or InvalidArgument.
    std::string complete(std::span<const ChatMessage> messages, const BackendPolicy& policy);

    [[nodiscard]] virtual std::string name() const = 0;

protected:
    virtual std::string do_complete(std::span<const ChatMessage> messages,
                                    const BackendPolicy& policy) = 0;
};

/// The VQA role: caption and question answering over one image.
class VisionBackend {
public:
    virtual ~VisionBackend() = default;

    /// Single-sentence caption. Fails with InvalidArgument before any call
    /// when the image cannot be resolved.
    std::string caption(const ImageRef& image, const BackendPolicy& policy);

    /// One answer per question, in order. An answer-count mismatch from the
    /// backend is a MalformedResponse; an empty question list is InvalidArgument.
    std::vector<std::string> vqa(const ImageRef& image, std::span<const std::string> questions,
                                 const BackendPolicy& policy);

    [[nodiscard]] virtual bool resolvable(const ImageRef& image) const;
    [[nodiscard]] virtual std::string name() const = 0;

protected:
    virtual std::string do_caption(const ImageRef& image, const BackendPolicy& policy) = 0;
    virtual std::vector<std::string> do_vqa(const ImageRef& image,
                                            std::span<const std::string> questions,
                                            const BackendPolicy& policy) = 0;
};

struct Backends {
    ReasoningBackend& reasoning;
    VisionBackend& vision;
};

} // namespace vice::backend
