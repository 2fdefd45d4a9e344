// SPDX-License-Identifier: Apache-2.0
#include "helpers.hpp"

#include "vice/backend/http.hpp"
#include "vice/core/transcript_io.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <deque>
#include <filesystem>
#include <thread>

namespace vice::backend {
namespace {

using nlohmann::json;
using testing::error_code_of;

/// Transport returning queued outcomes and recording every request.
class StubTransport final : public HttpTransport {
public:
    struct Outcome {
        int status = 200;
        std::string body;
        bool timeout = false;
        bool refused = false;
    };
    struct Request {
        std::string url;
        std::string body;
        Headers headers;
    };

    void push(Outcome o) { outcomes_.push_back(std::move(o)); }

    HttpResponse post(const std::string& url, const std::string& body, const Headers& headers,
                      std::chrono::milliseconds) override {
        requests.push_back({url, body, headers});
        return next(url);
    }
    HttpResponse get(const std::string& url, const Headers& headers, std::chrono::milliseconds) override {
        requests.push_back({url, "", headers});
        return next(url);
    }

    std::vector<Request> requests;

private:
    HttpResponse next(const std::string& url) {
        if (outcomes_.empty()) {
            throw TransportError(url + ": no stub outcome", false);
        }
        auto o = outcomes_.front();
        outcomes_.pop_front();
        if (o.timeout) {
            throw TransportError(url + ": timed out", true);
        }
        if (o.refused) {
            throw TransportError(url + ": connection refused", false);
        }
        return {o.status, o.body};
    }
    std::deque<Outcome> outcomes_;
};

std::string chat_reply(const std::string& content) {
    return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

struct SleepLog {
    std::vector<std::chrono::milliseconds> delays;
    Sleeper sleeper() {
        return [this](std::chrono::milliseconds d) { delays.push_back(d); };
    }
};

std::vector<ChatMessage> hello() { return {{Role::User, "hello"}}; }

TEST(PostWithRetry, RetriesServerErrorsWithExponentialBackoff) {
    auto stub = std::make_shared<StubTransport>();
    stub->push({503, "busy"});
    stub->push({429, "slow down"});
    stub->push({200, chat_reply("hi")});
    SleepLog sleeps;
    ChatCompletionClient client({"http://reasoning.local"}, stub, sleeps.sleeper());
    BackendPolicy policy;
    policy.max_retries = 2;
    policy.backoff_base = std::chrono::milliseconds(100);
    EXPECT_EQ(client.complete(hello(), policy), "hi");
    EXPECT_EQ(client.last_attempts(), 3);
    EXPECT_EQ(sleeps.delays, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(100),
                                                                      std::chrono::milliseconds(200)}));
}

TEST(PostWithRetry, ClientErrorsAreNotRetried) {
    auto stub = std::make_shared<StubTransport>();
    stub->push({400, "bad request"});
    SleepLog sleeps;
    ChatCompletionClient client({"http://reasoning.local"}, stub, sleeps.sleeper());
    EXPECT_EQ(error_code_of([&] { client.complete(hello(), BackendPolicy{}); }), ErrorCode::TransportFailure);
    EXPECT_EQ(stub->requests.size(), 1u);
    EXPECT_TRUE(sleeps.delays.empty());
}

TEST(PostWithRetry, ExhaustedTimeoutsRaiseTimeout) {
    auto stub = std::make_shared<StubTransport>();
    for (int i = 0; i < 3; ++i) {
        stub->push({.timeout = true});
    }
    SleepLog sleeps;
    ChatCompletionClient client({"http://reasoning.local"}, stub, sleeps.sleeper());
    BackendPolicy policy;
    policy.max_retries = 2;
    EXPECT_EQ(error_code_of([&] { client.complete(hello(), policy); }), ErrorCode::Timeout);
    EXPECT_EQ(stub->requests.size(), 3u);
}

TEST(PostWithRetry, ExhaustedConnectionFailuresRaiseTransportFailure) {
    auto stub = std::make_shared<StubTransport>();
    stub->push({.refused = true});
    stub->push({.timeout = true});
    stub->push({.refused = true});
    SleepLog sleeps;
    ChatCompletionClient client({"http://reasoning.local"}, stub, sleeps.sleeper());
    EXPECT_EQ(error_code_of([&] { client.complete(hello(), BackendPolicy{}); }), ErrorCode::TransportFailure);
}

TEST(ChatCompletionClient, RequestShapeAndAuth) {
    auto stub = std::make_shared<StubTransport>();
    stub->push({200, chat_reply("ok")});
    ChatCompletionClient client({"http://host:8000/", "my-model", "secret"}, stub);
    BackendPolicy policy;
    policy.temperature = 0.25;
    std::vector<ChatMessage> m{{Role::System, "s"}, {Role::User, "u"}};
    client.complete(m, policy);
    ASSERT_EQ(stub->requests.size(), 1u);
    EXPECT_EQ(stub->requests[0].url, "http://host:8000/v1/chat/completions");
    auto body = json::parse(stub->requests[0].body);
    EXPECT_EQ(body["model"], "my-model");
    EXPECT_EQ(body["temperature"], 0.25);
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_EQ(body["messages"][1]["content"], "u");
    ASSERT_EQ(stub->requests[0].headers.size(), 1u);
    EXPECT_EQ(stub->requests[0].headers[0].second, "Bearer secret");
}

TEST(ChatCompletionClient, MalformedBodies) {
    for (const char* body : {"not json", "{}", R"({"choices": []})", R"({"choices": [{"message": {"content": 5}}]})"}) {
        auto stub = std::make_shared<StubTransport>();
        stub->push({200, body});
        ChatCompletionClient client({"http://h"}, stub);
        EXPECT_EQ(error_code_of([&] { client.complete(hello(), BackendPolicy{}); }), ErrorCode::MalformedResponse)
            << body;
    }
}

TEST(HttpVisionClient, CountMismatchIsMalformed) {
    auto stub = std::make_shared<StubTransport>();
    stub->push({200, R"({"answers": ["yes"]})"});
    HttpVisionClient client({"http://vision"}, stub);
    std::vector<std::string> qs{"a?", "b?"};
    EXPECT_EQ(error_code_of([&] { client.vqa(ImageRef{"data:image/png;base64,AA=="}, qs, BackendPolicy{}); }),
              ErrorCode::MalformedResponse);
}

TEST(HttpVisionClient, InlineImagesAreSentAsDataUris) {
    auto file = std::filesystem::temp_directory_path() / "vice_inline.png";
    write_file_atomic(file, "abc");
    auto stub = std::make_shared<StubTransport>();
    stub->push({200, R"({"caption": "c"})"});
    HttpVisionClient client({"http://vision", std::nullopt, true}, stub);
    client.caption(ImageRef{file.string()}, BackendPolicy{});
    EXPECT_EQ(json::parse(stub->requests[0].body)["image"], "data:image/png;base64,YWJj");
    EXPECT_EQ(to_data_uri(file.string()), "data:image/png;base64,YWJj");
}

/// In-process server speaking the vision wire contract in echo mode.
class EchoVisionServer {
public:
    EchoVisionServer() {
        server_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            if (loading) {
                res.status = 503;
                res.set_content(R"({"status":"loading"})", "application/json");
                return;
            }
            res.set_content(R"({"status":"ok","mode":"echo","model":"echo"})", "application/json");
        });
        server_.Post("/caption", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            auto body = json::parse(req.body, nullptr, false);
            if (loading) {
                res.status = 503;
                return;
            }
            if (body.is_discarded() || !body.contains("image") || !body["image"].is_string() ||
                body["image"].get<std::string>().empty()) {
                res.status = 400;
                res.set_content(R"({"error":"missing image"})", "application/json");
                return;
            }
            res.set_content(json{{"caption", "ECHO:" + body["image"].get<std::string>()}}.dump(), "application/json");
        });
        server_.Post("/vqa", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            if (delay.count() > 0) {
                std::this_thread::sleep_for(delay);
            }
            auto body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.contains("image") || !body.contains("questions") ||
                !body["questions"].is_array() || body["questions"].empty()) {
                res.status = 400;
                res.set_content(R"({"error":"questions must be a non-empty array"})", "application/json");
                return;
            }
            json answers = json::array();
            for (const auto& q : body["questions"]) {
                answers.push_back("ECHO:" + q.get<std::string>());
            }
            res.set_content(json{{"answers", answers}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~EchoVisionServer() {
        server_.stop();
        thread_.join();
    }
    [[nodiscard]] std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    std::atomic<bool> loading{false};
    std::atomic<int> hits{0};
    std::chrono::milliseconds delay{0};

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

BackendPolicy fast_policy() {
    BackendPolicy p;
    p.timeout = std::chrono::milliseconds(2000);
    p.max_retries = 1;
    p.backoff_base = std::chrono::milliseconds(1);
    return p;
}

const ImageRef kImage{"data:image/png;base64,iVBORw0KGgo="};

TEST(VisionWireContract, CaptionAndOrderedAnswers) {
    EchoVisionServer server;
    HttpVisionClient client({server.url()});
    EXPECT_EQ(client.caption(kImage, fast_policy()), "ECHO:" + kImage.uri);
    std::vector<std::string> qs{"Is there a cat?", "What color is it?", "Is it on the stairs?"};
    auto answers = client.vqa(kImage, qs, fast_policy());
    ASSERT_EQ(answers.size(), 3u);
    for (std::size_t i = 0; i < qs.size(); ++i) {
        EXPECT_EQ(answers[i], "ECHO:" + qs[i]);
    }
    auto health = client.health(fast_policy());
    EXPECT_EQ(health["status"], "ok");
}

TEST(VisionWireContract, OrderingHoldsUnderConcurrentRequests) {
    EchoVisionServer server;
    HttpVisionClient client({server.url()});
    std::atomic<int> mismatches{0};
    std::vector<std::jthread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            std::vector<std::string> qs;
            for (int i = 0; i < 10; ++i) {
                qs.push_back("thread " + std::to_string(t) + " question " + std::to_string(i) + "?");
            }
            auto answers = client.vqa(kImage, qs, fast_policy());
            for (std::size_t i = 0; i < qs.size(); ++i) {
                mismatches += answers[i] == "ECHO:" + qs[i] ? 0 : 1;
            }
        });
    }
    threads.clear();
    EXPECT_EQ(mismatches.load(), 0);
}

TEST(VisionWireContract, SchemaViolationIs400AndNotRetried) {
    EchoVisionServer server;
    auto transport = make_http_transport();
    auto res = transport->post(server.url() + "/vqa", R"({"image":"x","questions":[]})", {}, std::chrono::seconds(2));
    EXPECT_EQ(res.status, 400);
    res = transport->post(server.url() + "/caption", R"({})", {}, std::chrono::seconds(2));
    EXPECT_EQ(res.status, 400);

    server.hits = 0;
    auto policy = fast_policy();
    policy.max_retries = 3;
    // Rewrites the body so the server sees an empty image after the
    // client-side resolvability check has passed.
    class Raw final : public HttpTransport {
    public:
        explicit Raw(std::shared_ptr<HttpTransport> inner) : inner_(std::move(inner)) {}
        HttpResponse post(const std::string& url, const std::string&, const Headers& h,
                          std::chrono::milliseconds t) override {
            return inner_->post(url, R"({"image":""})", h, t);
        }
        HttpResponse get(const std::string& url, const Headers& h, std::chrono::milliseconds t) override {
            return inner_->get(url, h, t);
        }

    private:
        std::shared_ptr<HttpTransport> inner_;
    };
    HttpVisionClient rejecting({server.url()}, std::make_shared<Raw>(make_http_transport()));
    EXPECT_EQ(error_code_of([&] { rejecting.caption(kImage, policy); }), ErrorCode::TransportFailure);
    EXPECT_EQ(server.hits.load(), 1);
}

TEST(VisionWireContract, LoadingServerIs503AndRetried) {
    EchoVisionServer server;
    server.loading = true;
    HttpVisionClient client({server.url()});
    auto policy = fast_policy();
    policy.max_retries = 2;
    EXPECT_EQ(error_code_of([&] { client.caption(kImage, policy); }), ErrorCode::TransportFailure);
    EXPECT_EQ(server.hits.load(), 3);
    EXPECT_EQ(error_code_of([&] { client.health(policy); }), ErrorCode::TransportFailure);
}

TEST(VisionWireContract, SlowServerTimesOut) {
    EchoVisionServer server;
    server.delay = std::chrono::milliseconds(400);
    HttpVisionClient client({server.url()});
    auto policy = fast_policy();
    policy.timeout = std::chrono::milliseconds(100);
    policy.max_retries = 0;
    std::vector<std::string> qs{"q?"};
    EXPECT_EQ(error_code_of([&] { client.vqa(kImage, qs, policy); }), ErrorCode::Timeout);
}

TEST(VisionWireContract, UnreachableServer) {
    HttpVisionClient client({"http://127.0.0.1:1"});
    auto policy = fast_policy();
    policy.max_retries = 0;
    auto code = error_code_of([&] { client.caption(kImage, policy); });
    ASSERT_TRUE(code);
    EXPECT_TRUE(*code == ErrorCode::TransportFailure || *code == ErrorCode::Timeout);
}

} // namespace
} // namespace vice::backend
