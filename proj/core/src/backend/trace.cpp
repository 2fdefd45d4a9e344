// SPDX-License-Identifier: Apache-2.0
#include "vice/backend/trace.hpp"

#include "vice/core/text.hpp"

namespace vice::backend {

void CallLog::append(CallRecord record) {
    std::lock_guard lock(mutex_);
    records_.push_back(std::move(record));
}

std::vector<CallRecord> CallLog::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::string TracingReasoning::do_complete(std::span<const ChatMessage> messages,
                                          const BackendPolicy& policy) {
    std::string detail;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == Role::User) {
            detail = text::split_lines(it->content).front();
            break;
        }
    }
    {
        std::lock_guard lock(mutex_);
        requests_.emplace_back(messages.begin(), messages.end());
    }
    log_.append({"reasoning", "complete", detail, request_digest(messages, policy.temperature)});
    return inner_.complete(messages, policy);
}

std::vector<std::vector<ChatMessage>> TracingReasoning::requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

std::string TracingVision::do_caption(const ImageRef& image, const BackendPolicy& policy) {
    log_.append({"vision", "caption", image.uri, {}});
    return inner_.caption(image, policy);
}

std::vector<std::string> TracingVision::do_vqa(const ImageRef& image, std::span<const std::string> questions,
                                               const BackendPolicy& policy) {
    {
        std::lock_guard lock(mutex_);
        vqa_requests_.emplace_back(image.uri, std::vector<std::string>(questions.begin(), questions.end()));
    }
    log_.append({"vision", "vqa", image.uri, {}});
    return inner_.vqa(image, questions, policy);
}

std::vector<std::pair<std::string, std::vector<std::string>>> TracingVision::vqa_requests() const {
    std::lock_guard lock(mutex_);
    return vqa_requests_;
}

} // namespace vice::backend
