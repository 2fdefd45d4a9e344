// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/backend/backend.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vice::backend {

enum class ScriptMode {
    /// Replies are looked up by request digest; safe for concurrent pipelines.
    Strict,
    /// Replies are handed out in call order. Single-pipeline tests only.
    Sequence,
};

struct ScriptEntry {
    std::optional<std::string> digest;
    std::optional<std::size_t> index;
    std::string reply;
};

/// Reasoning backend answering from a script file:
///   [{"match": {"digest": "<sha256>"}, "reply": "..."}, ...]   strict mode
///   [{"match": {"index": 0}, "reply": "..."}, ...]             sequence mode
/// Requests without a matching entry raise UnscriptedRequest carrying the digest.
class ScriptedReasoning final : public ReasoningBackend {
public:
    ScriptedReasoning(ScriptMode mode, std::vector<ScriptEntry> entries, std::string model = "scripted");

    static std::unique_ptr<ScriptedReasoning> from_json(const nlohmann::json& script);

    [[nodiscard]] ScriptMode mode() const noexcept { return mode_; }
    [[nodiscard]] std::size_t calls() const;
    [[nodiscard]] std::string name() const override { return model_; }

protected:
    std::string do_complete(std::span<const ChatMessage> messages, const BackendPolicy& policy) override;

private:
    ScriptMode mode_;
    std::string model_;
    std::map<std::string, std::string> by_digest_;
    std::map<std::size_t, std::string> by_index_;
    mutable std::mutex mutex_;
    std::size_t calls_ = 0;
};

std::unique_ptr<ScriptedReasoning> load_script(const std::filesystem::path& path);

/// Vision backend answering from a script file:
///   {"captions": {"<image>": "..."},
///    "answers":  {"<image>": {"<question>": "..."}}}
/// An image is resolvable when the script mentions it. Unknown questions
/// raise UnscriptedRequest.
class ScriptedVision final : public VisionBackend {
public:
    ScriptedVision(std::map<std::string, std::string> captions,
                   std::map<std::string, std::map<std::string, std::string>> answers,
                   std::string model = "scripted-vqa");

    static std::unique_ptr<ScriptedVision> from_json(const nlohmann::json& script);

    [[nodiscard]] bool resolvable(const ImageRef& image) const override;
    [[nodiscard]] std::string name() const override { return model_; }

protected:
    std::string do_caption(const ImageRef& image, const BackendPolicy& policy) override;
    std::vector<std::string> do_vqa(const ImageRef& image, std::span<const std::string> questions,
                                    const BackendPolicy& policy) override;

private:
    std::map<std::string, std::string> captions_;
    std::map<std::string, std::map<std::string, std::string>> answers_;
    std::string model_;
};

std::unique_ptr<ScriptedVision> load_vision_script(const std::filesystem::path& path);

/// Cassette recorder for the reasoning role: forwards to `inner` and keeps
/// every (digest, reply) pair, so a live session can be replayed in strict mode.
class RecordingReasoning final : public ReasoningBackend {
public:
    explicit RecordingReasoning(ReasoningBackend& inner) : inner_(inner) {}

    [[nodiscard]] nlohmann::json script_json() const;
    void save(const std::filesystem::path& path) const;
    [[nodiscard]] std::string name() const override { return inner_.name(); }

protected:
    std::string do_complete(std::span<const ChatMessage> messages, const BackendPolicy& policy) override;

private:
    ReasoningBackend& inner_;
    mutable std::mutex mutex_;
    std::vector<std::pair<std::string, std::string>> entries_;
    std::map<std::string, std::size_t> seen_;
};

/// Cassette recorder for the vision role; emits the ScriptedVision format.
class RecordingVision final : public VisionBackend {
public:
    explicit RecordingVision(VisionBackend& inner) : inner_(inner) {}

    [[nodiscard]] nlohmann::json script_json() const;
    void save(const std::filesystem::path& path) const;
    [[nodiscard]] bool resolvable(const ImageRef& image) const override { return inner_.resolvable(image); }
    [[nodiscard]] std::string name() const override { return inner_.name(); }

protected:
    std::string do_caption(const ImageRef& image, const BackendPolicy& policy) override;
    std::vector<std::string> do_vqa(const ImageRef& image, std::span<const std::string> questions,
                                    const BackendPolicy& policy) override;

private:
    VisionBackend& inner_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> captions_;
    std::map<std::string, std::map<std::string, std::string>> answers_;
};

} // namespace vice::backend
