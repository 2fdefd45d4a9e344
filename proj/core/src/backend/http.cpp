// SPDX-License-Identifier: Apache-2.0
#include "vice/backend/http.hpp"

#include "vice/core/error.hpp"
#include "vice/core/transcript_io.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <thread>

namespace vice::backend {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        fail(ErrorCode::InvalidArgument, fmt::format("URL '{}' has no scheme", url));
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string join_url(const std::string& base, std::string_view path) {
    std::string out = base;
    while (!out.empty() && out.back() == '/') {
        out.pop_back();
    }
    out += path;
    return out;
}

class HttplibTransport final : public HttpTransport {
public:
    HttpResponse post(const std::string& url, const std::string& body, const Headers& headers,
                      std::chrono::milliseconds timeout) override {
        return send(url, headers, timeout, [&](httplib::Client& cli, const std::string& path,
                                               const httplib::Headers& h) {
            return cli.Post(path, h, body, "application/json");
        });
    }

    HttpResponse get(const std::string& url, const Headers& headers, std::chrono::milliseconds timeout) override {
        return send(url, headers, timeout, [&](httplib::Client& cli, const std::string& path,
                                               const httplib::Headers& h) { return cli.Get(path, h); });
    }

private:
    template <typename Call>
    HttpResponse send(const std::string& url, const Headers& headers, std::chrono::milliseconds timeout,
                      Call call) {
        const auto parts = split_url(url);
        httplib::Client cli(parts.origin);
        cli.set_connection_timeout(timeout);
        cli.set_read_timeout(timeout);
        cli.set_write_timeout(timeout);
        httplib::Headers h;
        for (const auto& [k, v] : headers) {
            h.emplace(k, v);
        }
        const auto start = Clock::now();
        auto res = call(cli, parts.path, h);
        if (!res) {
            const auto elapsed = Clock::now() - start;
            const bool timed_out = res.error() == httplib::Error::ConnectionTimeout || elapsed >= timeout;
            throw TransportError(fmt::format("{}: {}", url, httplib::to_string(res.error())), timed_out);
        }
        return {res->status, res->body};
    }
};

bool retryable_status(int status) {
    return status == 429 || status >= 500;
}

Headers auth_headers(const std::optional<std::string>& api_key) {
    Headers h;
    if (api_key && !api_key->empty()) {
        h.emplace_back("Authorization", "Bearer " + *api_key);
    }
    return h;
}

json parse_body(const HttpResponse& response, std::string_view what) {
    auto parsed = json::parse(response.body, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded() || !parsed.is_object()) {
        fail(ErrorCode::MalformedResponse, fmt::format("{}: response body is not a JSON object", what));
    }
    return parsed;
}

} // namespace

std::shared_ptr<HttpTransport> make_http_transport() {
    return std::make_shared<HttplibTransport>();
}

HttpResponse post_with_retry(HttpTransport& transport, const std::string& url, const std::string& body,
                             const Headers& headers, const BackendPolicy& policy, const Sleeper& sleep,
                             int* attempts) {
    const int max_attempts = policy.max_retries + 1;
    std::string last_error;
    bool last_timed_out = false;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        if (attempts) {
            *attempts = attempt + 1;
        }
        if (attempt > 0) {
            const auto delay = policy.backoff_base * (1LL << std::min(attempt - 1, 20));
            if (sleep) {
                sleep(delay);
            } else if (delay.count() > 0) {
                std::this_thread::sleep_for(delay);
            }
        }
        try {
            auto response = transport.post(url, body, headers, policy.timeout);
            if (response.status >= 200 && response.status < 300) {
                spdlog::debug("POST {} succeeded after {} attempt(s)", url, attempt + 1);
                return response;
            }
            last_error = fmt::format("HTTP {}", response.status);
            last_timed_out = false;
            if (!retryable_status(response.status)) {
                fail(ErrorCode::TransportFailure,
                     fmt::format("POST {}: HTTP {}: {}", url, response.status, response.body.substr(0, 200)));
            }
        } catch (const TransportError& e) {
            last_error = e.what();
            last_timed_out = e.timed_out();
        }
        spdlog::warn("POST {} attempt {}/{} failed: {}", url, attempt + 1, max_attempts, last_error);
    }
    if (last_timed_out) {
        fail(ErrorCode::Timeout, fmt::format("POST {}: timed out after {} attempt(s) (budget {} ms each)", url,
                                             max_attempts, policy.timeout.count()));
    }
    fail(ErrorCode::TransportFailure,
         fmt::format("POST {}: {} after {} attempt(s)", url, last_error, max_attempts));
}

ChatCompletionClient::ChatCompletionClient(Options options, std::shared_ptr<HttpTransport> transport, Sleeper sleep)
    : options_(std::move(options)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
    require(!options_.base_url.empty(), "reasoning endpoint URL is empty");
}

std::string ChatCompletionClient::do_complete(std::span<const ChatMessage> messages, const BackendPolicy& policy) {
    auto msgs = json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    const json body{{"model", options_.model}, {"messages", msgs}, {"temperature", policy.temperature}};
    const auto url = join_url(options_.base_url, "/v1/chat/completions");
    int attempts = 0;
    auto response = post_with_retry(*transport_, url, body.dump(), auth_headers(options_.api_key), policy, sleep_,
                                    &attempts);
    last_attempts_ = attempts;
    auto parsed = parse_body(response, "chat completion");
    try {
        const auto& content = parsed.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) {
            fail(ErrorCode::MalformedResponse, "chat completion: choices[0].message.content is not a string");
        }
        return content.get<std::string>();
    } catch (const json::exception&) {
        fail(ErrorCode::MalformedResponse, "chat completion: missing choices[0].message.content");
    }
}

HttpVisionClient::HttpVisionClient(Options options, std::shared_ptr<HttpTransport> transport, Sleeper sleep)
    : options_(std::move(options)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
    require(!options_.base_url.empty(), "vision endpoint URL is empty");
}

std::string HttpVisionClient::wire_image(const ImageRef& image) const {
    if (options_.inline_images && !image.is_data_uri()) {
        return to_data_uri(image.uri);
    }
    return image.uri;
}

json HttpVisionClient::post_json(const std::string& path, const json& body, const BackendPolicy& policy) {
    auto response = post_with_retry(*transport_, join_url(options_.base_url, path), body.dump(),
                                    auth_headers(options_.api_key), policy, sleep_);
    return parse_body(response, path);
}

std::string HttpVisionClient::do_caption(const ImageRef& image, const BackendPolicy& policy) {
    auto parsed = post_json("/caption", json{{"image", wire_image(image)}}, policy);
    auto it = parsed.find("caption");
    if (it == parsed.end() || !it->is_string()) {
        fail(ErrorCode::MalformedResponse, "/caption: response has no string 'caption'");
    }
    return it->get<std::string>();
}

std::vector<std::string> HttpVisionClient::do_vqa(const ImageRef& image, std::span<const std::string> questions,
                                                  const BackendPolicy& policy) {
    const json body{{"image", wire_image(image)},
                    {"questions", std::vector<std::string>(questions.begin(), questions.end())}};
    auto parsed = post_json("/vqa", body, policy);
    auto it = parsed.find("answers");
    if (it == parsed.end() || !it->is_array()) {
        fail(ErrorCode::MalformedResponse, "/vqa: response has no 'answers' array");
    }
    std::vector<std::string> answers;
    for (const auto& a : *it) {
        if (!a.is_string()) {
            fail(ErrorCode::MalformedResponse, "/vqa: non-string answer");
        }
        answers.push_back(a.get<std::string>());
    }
    if (answers.size() != questions.size()) {
        fail(ErrorCode::MalformedResponse,
             fmt::format("/vqa: received {} answers for {} questions", answers.size(), questions.size()));
    }
    return answers;
}

json HttpVisionClient::health(const BackendPolicy& policy) {
    const auto url = join_url(options_.base_url, "/healthz");
    HttpResponse response;
    try {
        response = transport_->get(url, auth_headers(options_.api_key), policy.timeout);
    } catch (const TransportError& e) {
        fail(e.timed_out() ? ErrorCode::Timeout : ErrorCode::TransportFailure, e.what());
    }
    if (response.status != 200) {
        fail(ErrorCode::TransportFailure, fmt::format("GET {}: HTTP {}", url, response.status));
    }
    return parse_body(response, "/healthz");
}

std::string to_data_uri(const std::string& path) {
    const auto bytes = read_file(path);
    std::string encoded(4 * ((bytes.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(encoded.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()),
                                  static_cast<int>(bytes.size()));
    encoded.resize(static_cast<std::size_t>(n));
    auto ext = std::filesystem::path(path).extension().string();
    std::string mime = "application/octet-stream";
    if (ext == ".png") {
        mime = "image/png";
    } else if (ext == ".jpg" || ext == ".jpeg") {
        mime = "image/jpeg";
    } else if (ext == ".webp") {
        mime = "image/webp";
    }
    return fmt::format("data:{};base64,{}", mime, encoded);
}

} // namespace vice::backend
