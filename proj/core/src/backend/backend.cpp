// SPDX-License-Identifier: Apache-2.0
#include "vice/backend/backend.hpp"

#include "vice/core/error.hpp"
#include "vice/core/text.hpp"
#include "vice/core/validate.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <filesystem>

namespace vice::backend {

std::string_view to_string(Role r) noexcept {
    switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    }
    return "user";
}

namespace {

std::string normalize_content(std::string_view content) {
    std::string out;
    bool first = true;
    for (auto& line : text::split_lines(content)) {
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) {
            line.pop_back();
        }
        if (!first) {
            out.push_back('\n');
        }
        out += line;
        first = false;
    }
    return text::trim(out);
}

} // namespace

std::string request_digest(std::span<const ChatMessage> messages, double temperature) {
    auto arr = nlohmann::json::array();
    for (const auto& m : messages) {
        arr.push_back({{"role", to_string(m.role)}, {"content", normalize_content(m.content)}});
    }
    nlohmann::json canonical{{"messages", arr}, {"temperature", fmt::format("{:.6g}", temperature)}};
    return sha256_hex(canonical.dump());
}

std::string ReasoningBackend::complete(std::span<const ChatMessage> messages,
                                       const BackendPolicy& policy) {
    require(!messages.empty(), "complete: message list is empty");
    for (std::size_t i = 0; i < messages.size(); ++i) {
        require(!messages[i].content.empty(), fmt::format("complete: message {} has empty content", i));
    }
    require(policy.timeout.count() > 0, "complete: policy timeout must be > 0");
    require(policy.max_retries >= 0, "complete: max_retries must be >= 0");
    return do_complete(messages, policy);
}

bool VisionBackend::resolvable(const ImageRef& image) const {
    if (image.empty()) {
        return false;
    }
    if (image.is_data_uri()) {
        return image.uri.find(',') != std::string::npos;
    }
    std::error_code ec;
    return std::filesystem::is_regular_file(image.uri, ec);
}

std::string VisionBackend::caption(const ImageRef& image, const BackendPolicy& policy) {
    require(policy.timeout.count() > 0, "caption: policy timeout must be > 0");
    require(resolvable(image), fmt::format("caption: image '{}' cannot be resolved", image.uri));
    return do_caption(image, policy);
}

std::vector<std::string> VisionBackend::vqa(const ImageRef& image,
                                            std::span<const std::string> questions,
                                            const BackendPolicy& policy) {
    require(!questions.empty(), "vqa: question list is empty");
    require(policy.timeout.count() > 0, "vqa: policy timeout must be > 0");
    require(resolvable(image), fmt::format("vqa: image '{}' cannot be resolved", image.uri));
    auto answers = do_vqa(image, questions, policy);
    if (answers.size() != questions.size()) {
        fail(ErrorCode::MalformedResponse,
             fmt::format("vqa: received {} answers for {} questions", answers.size(), questions.size()));
    }
    return answers;
}

} // namespace vice::backend
