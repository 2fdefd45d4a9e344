// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/backend/backend.hpp"
#include "vice/core/error.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace vice::testing {

/// Reasoning backend driven by a callback; records every request.
class FnReasoning final : public backend::ReasoningBackend {
public:
    using Fn = std::function<std::string(std::span<const backend::ChatMessage>)>;
    explicit FnReasoning(Fn fn) : fn_(std::move(fn)) {}
    [[nodiscard]] std::string name() const override { return "fn"; }
    [[nodiscard]] std::vector<std::vector<backend::ChatMessage>> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }

protected:
    std::string do_complete(std::span<const backend::ChatMessage> messages, const backend::BackendPolicy&) override {
        {
            std::lock_guard lock(mutex_);
            requests_.emplace_back(messages.begin(), messages.end());
        }
        return fn_(messages);
    }

private:
    Fn fn_;
    mutable std::mutex mutex_;
    std::vector<std::vector<backend::ChatMessage>> requests_;
};

/// Replies handed out in order; the last one repeats.
inline FnReasoning::Fn replies(std::vector<std::string> list) {
    auto state = std::make_shared<std::pair<std::size_t, std::vector<std::string>>>(0, std::move(list));
    return [state](std::span<const backend::ChatMessage>) {
        auto& [i, l] = *state;
        const auto& r = l[std::min(i, l.size() - 1)];
        ++i;
        return r;
    };
}

/// Vision backend answering every image with the same caption and a callback.
class FnVision final : public backend::VisionBackend {
public:
    using Fn = std::function<std::string(const ImageRef&, const std::string&)>;
    explicit FnVision(Fn fn, std::string caption = "an image") : fn_(std::move(fn)), caption_(std::move(caption)) {}
    [[nodiscard]] bool resolvable(const ImageRef& image) const override { return !image.empty(); }
    [[nodiscard]] std::string name() const override { return "fn-vqa"; }

protected:
    std::string do_caption(const ImageRef&, const backend::BackendPolicy&) override { return caption_; }
    std::vector<std::string> do_vqa(const ImageRef& image, std::span<const std::string> questions,
                                    const backend::BackendPolicy&) override {
        std::vector<std::string> out;
        for (const auto& q : questions) {
            out.push_back(fn_(image, q));
        }
        return out;
    }

private:
    Fn fn_;
    std::string caption_;
};

/// Error code raised by `f`, or nullopt if it returned normally.
template <typename F>
std::optional<ErrorCode> error_code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

inline std::string last_user(std::span<const backend::ChatMessage> m) {
    for (auto it = m.rbegin(); it != m.rend(); ++it) {
        if (it->role == backend::Role::User) {
            return it->content;
        }
    }
    return {};
}

} // namespace vice::testing
