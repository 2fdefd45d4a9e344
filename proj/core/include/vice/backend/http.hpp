// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/backend/backend.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace vice::backend {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Raised by transports when no HTTP response was obtained.
class TransportError : public std::runtime_error {
public:
    TransportError(const std::string& what, bool timed_out) : std::runtime_error(what), timed_out_(timed_out) {}
    [[nodiscard]] bool timed_out() const noexcept { return timed_out_; }

private:
    bool timed_out_;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const std::string& url, const std::string& body, const Headers& headers,
                              std::chrono::milliseconds timeout) = 0;
    virtual HttpResponse get(const std::string& url, const Headers& headers, std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed transport; http:// and https:// URLs.
std::shared_ptr<HttpTransport> make_http_transport();

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// POST with the retry contract shared by both clients: transport errors,
/// HTTP 429 and 5xx are retried up to policy.max_retries times with
/// exponential backoff (backoff_base * 2^attempt). Other non-2xx statuses
/// fail immediately. Exhaustion raises Timeout when the last attempt timed
/// out and TransportFailure otherwise. `attempts` receives the attempt count.
HttpResponse post_with_retry(HttpTransport& transport, const std::string& url, const std::string& body,
                             const Headers& headers, const BackendPolicy& policy, const Sleeper& sleep,
                             int* attempts = nullptr);

/// Reasoning client for a chat-completion compatible endpoint:
/// POST {base_url}/v1/chat/completions {"model","messages","temperature"}.
class ChatCompletionClient final : public ReasoningBackend {
public:
    struct Options {
        std::string base_url;
        std::string model = "gpt-3.5-turbo";
        std::optional<std::string> api_key;
    };

    explicit ChatCompletionClient(Options options, std::shared_ptr<HttpTransport> transport = make_http_transport(),
                                  Sleeper sleep = {});

    [[nodiscard]] std::string name() const override { return options_.model; }
    [[nodiscard]] int last_attempts() const noexcept { return last_attempts_.load(); }
    [[nodiscard]] const Options& options() const noexcept { return options_; }

protected:
    std::string do_complete(std::span<const ChatMessage> messages, const BackendPolicy& policy) override;

private:
    Options options_;
    std::shared_ptr<HttpTransport> transport_;
    Sleeper sleep_;
    std::atomic<int> last_attempts_{0};
};

/// Vision client: POST {base_url}/caption {"image"} -> {"caption"};
/// POST {base_url}/vqa {"image","questions"} -> {"answers"}; GET {base_url}/healthz.
class HttpVisionClient final : public VisionBackend {
public:
    struct Options {
        std::string base_url;
        std::optional<std::string> api_key;
        /// Send local files as base64 `data:` URIs instead of their path.
        bool inline_images = false;
        std::string model = "vqa";
    };

    explicit HttpVisionClient(Options options, std::shared_ptr<HttpTransport> transport = make_http_transport(),
                              Sleeper sleep = {});

    [[nodiscard]] std::string name() const override { return options_.model; }
    [[nodiscard]] const Options& options() const noexcept { return options_; }

    /// GET /healthz; throws on transport failure or a non-200 status.
    nlohmann::json health(const BackendPolicy& policy);

protected:
    std::string do_caption(const ImageRef& image, const BackendPolicy& policy) override;
    std::vector<std::string> do_vqa(const ImageRef& image, std::span<const std::string> questions,
                                    const BackendPolicy& policy) override;

private:
    std::string wire_image(const ImageRef& image) const;
    nlohmann::json post_json(const std::string& path, const nlohmann::json& body, const BackendPolicy& policy);

    Options options_;
    std::shared_ptr<HttpTransport> transport_;
    Sleeper sleep_;
};

/// `data:<mime>;base64,<payload>` for a local file.
std::string to_data_uri(const std::string& path);

} // namespace vice::backend
