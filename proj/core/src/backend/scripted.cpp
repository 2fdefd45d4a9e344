// SPDX-License-Identifier: Apache-2.0
#include "vice/backend/scripted.hpp"

#include "vice/core/error.hpp"
#include "vice/core/transcript_io.hpp"

#include <cstdint>

#include <fmt/format.h>

namespace vice::backend {

using nlohmann::json;

namespace {

json parse_script_file(const std::filesystem::path& path) {
    std::string body;
    try {
        body = read_file(path);
    } catch (const Error& e) {
        fail(ErrorCode::ScriptParseError, e.what());
    }
    auto parsed = json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) {
        fail(ErrorCode::ScriptParseError, fmt::format("'{}' is not valid JSON", path.string()));
    }
    return parsed;
}

std::string short_digest(const std::string& digest) {
    return digest.substr(0, 16);
}

} // namespace

ScriptedReasoning::ScriptedReasoning(ScriptMode mode, std::vector<ScriptEntry> entries, std::string model)
    : mode_(mode), model_(std::move(model)) {
    for (auto& e : entries) {
        if (mode_ == ScriptMode::Strict) {
            if (!e.digest) {
                fail(ErrorCode::ScriptParseError, "strict script entry without digest");
            }
            auto [it, inserted] = by_digest_.emplace(*e.digest, e.reply);
            if (!inserted && it->second != e.reply) {
                fail(ErrorCode::ScriptParseError,
                     fmt::format("conflicting replies for digest {}", short_digest(*e.digest)));
            }
        } else {
            if (!e.index) {
                fail(ErrorCode::ScriptParseError, "sequence script entry without index");
            }
            if (!by_index_.emplace(*e.index, std::move(e.reply)).second) {
                fail(ErrorCode::ScriptParseError, fmt::format("duplicate sequence index {}", *e.index));
            }
        }
    }
}

std::unique_ptr<ScriptedReasoning> ScriptedReasoning::from_json(const json& script) {
    if (!script.is_array()) {
        fail(ErrorCode::ScriptParseError, "script must be a JSON array");
    }
    std::vector<ScriptEntry> entries;
    std::optional<ScriptMode> mode;
    for (std::size_t i = 0; i < script.size(); ++i) {
        const auto& item = script[i];
        if (!item.is_object() || !item.contains("match") || !item["match"].is_object() ||
            !item.contains("reply") || !item["reply"].is_string()) {
            fail(ErrorCode::ScriptParseError,
                 fmt::format("script entry {} must be {{\"match\": {{...}}, \"reply\": string}}", i));
        }
        const auto& match = item["match"];
        ScriptEntry entry;
        entry.reply = item["reply"].get<std::string>();
        ScriptMode entry_mode;
        if (match.contains("digest") && match["digest"].is_string()) {
            entry.digest = match["digest"].get<std::string>();
            entry_mode = ScriptMode::Strict;
        } else if (match.contains("index") && match["index"].is_number_integer() && match["index"].get<std::int64_t>() >= 0) {
            entry.index = match["index"].get<std::size_t>();
            entry_mode = ScriptMode::Sequence;
        } else {
            fail(ErrorCode::ScriptParseError,
                 fmt::format("script entry {} must match on a digest string or a non-negative index", i));
        }
        if (mode && *mode != entry_mode) {
            fail(ErrorCode::ScriptParseError, "script mixes digest and index entries");
        }
        mode = entry_mode;
        entries.push_back(std::move(entry));
    }
    return std::make_unique<ScriptedReasoning>(mode.value_or(ScriptMode::Strict), std::move(entries));
}

std::size_t ScriptedReasoning::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::string ScriptedReasoning::do_complete(std::span<const ChatMessage> messages,
                                           const BackendPolicy& policy) {
    std::lock_guard lock(mutex_);
    const auto call = calls_++;
    if (mode_ == ScriptMode::Strict) {
        const auto digest = request_digest(messages, policy.temperature);
        auto it = by_digest_.find(digest);
        if (it == by_digest_.end()) {
            fail(ErrorCode::UnscriptedRequest, fmt::format("no scripted reply for request digest {}", digest));
        }
        return it->second;
    }
    auto it = by_index_.find(call);
    if (it == by_index_.end()) {
        fail(ErrorCode::UnscriptedRequest,
             fmt::format("sequence script has no reply for call {} (digest {})", call,
                         request_digest(messages, policy.temperature)));
    }
    return it->second;
}

std::unique_ptr<ScriptedReasoning> load_script(const std::filesystem::path& path) {
    return ScriptedReasoning::from_json(parse_script_file(path));
}

ScriptedVision::ScriptedVision(std::map<std::string, std::string> captions,
                               std::map<std::string, std::map<std::string, std::string>> answers,
                               std::string model)
    : captions_(std::move(captions)), answers_(std::move(answers)), model_(std::move(model)) {}

std::unique_ptr<ScriptedVision> ScriptedVision::from_json(const json& script) {
    if (!script.is_object()) {
        fail(ErrorCode::ScriptParseError, "vision script must be a JSON object");
    }
    try {
        auto captions = script.value("captions", std::map<std::string, std::string>{});
        auto answers = script.value("answers", std::map<std::string, std::map<std::string, std::string>>{});
        return std::make_unique<ScriptedVision>(std::move(captions), std::move(answers),
                                                script.value("model", std::string("scripted-vqa")));
    } catch (const json::exception& e) {
        fail(ErrorCode::ScriptParseError, fmt::format("vision script: {}", e.what()));
    }
}

bool ScriptedVision::resolvable(const ImageRef& image) const {
    return captions_.contains(image.uri) || answers_.contains(image.uri);
}

std::string ScriptedVision::do_caption(const ImageRef& image, const BackendPolicy&) {
    auto it = captions_.find(image.uri);
    if (it == captions_.end()) {
        fail(ErrorCode::UnscriptedRequest, fmt::format("no scripted caption for image '{}'", image.uri));
    }
    return it->second;
}

std::vector<std::string> ScriptedVision::do_vqa(const ImageRef& image, std::span<const std::string> questions,
                                                const BackendPolicy&) {
    auto img = answers_.find(image.uri);
    if (img == answers_.end()) {
        fail(ErrorCode::UnscriptedRequest, fmt::format("no scripted answers for image '{}'", image.uri));
    }
    std::vector<std::string> out;
    out.reserve(questions.size());
    for (const auto& q : questions) {
        auto it = img->second.find(q);
        if (it == img->second.end()) {
            fail(ErrorCode::UnscriptedRequest,
                 fmt::format("no scripted answer for image '{}' question \"{}\"", image.uri, q));
        }
        out.push_back(it->second);
    }
    return out;
}

std::unique_ptr<ScriptedVision> load_vision_script(const std::filesystem::path& path) {
    return ScriptedVision::from_json(parse_script_file(path));
}

std::string RecordingReasoning::do_complete(std::span<const ChatMessage> messages,
                                            const BackendPolicy& policy) {
    auto reply = inner_.complete(messages, policy);
    const auto digest = request_digest(messages, policy.temperature);
    std::lock_guard lock(mutex_);
    if (!seen_.contains(digest)) {
        seen_.emplace(digest, entries_.size());
        entries_.emplace_back(digest, reply);
    }
    return reply;
}

json RecordingReasoning::script_json() const {
    std::lock_guard lock(mutex_);
    auto arr = json::array();
    for (const auto& [digest, reply] : entries_) {
        arr.push_back({{"match", {{"digest", digest}}}, {"reply", reply}});
    }
    return arr;
}

void RecordingReasoning::save(const std::filesystem::path& path) const {
    write_file_atomic(path, script_json().dump(2) + "\n");
}

std::string RecordingVision::do_caption(const ImageRef& image, const BackendPolicy& policy) {
    auto caption = inner_.caption(image, policy);
    std::lock_guard lock(mutex_);
    captions_.emplace(image.uri, caption);
    return caption;
}

std::vector<std::string> RecordingVision::do_vqa(const ImageRef& image, std::span<const std::string> questions,
                                                 const BackendPolicy& policy) {
    auto answers = inner_.vqa(image, questions, policy);
    std::lock_guard lock(mutex_);
    auto& table = answers_[image.uri];
    for (std::size_t i = 0; i < questions.size(); ++i) {
        table.emplace(questions[i], answers[i]);
    }
    return answers;
}

json RecordingVision::script_json() const {
    std::lock_guard lock(mutex_);
    return json{{"captions", captions_}, {"answers", answers_}};
}

void RecordingVision::save(const std::filesystem::path& path) const {
    write_file_atomic(path, script_json().dump(2) + "\n");
}

} // namespace vice::backend
