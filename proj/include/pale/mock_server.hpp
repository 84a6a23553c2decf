#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace httplib {
class Server;
}

namespace pale {

inline constexpr std::string_view kMockExhaustedMarker = "mock-script-exhausted";

/// One canned reply of the mock chat-completions endpoint.
struct MockReply {
    int status = 200;
    std::string content;
    std::string finish_reason = "stop";
    // When set, sent verbatim instead of a generated completion body.
    std::optional<std::string> raw_body;

    static MockReply ok(std::string content);
    static MockReply failure(int status);
    static MockReply raw(int status, std::string body);
};

/// Computes a reply from the parsed request body and its 0-based arrival index.
using MockHandler = std::function<MockReply(const nlohmann::json& request, std::size_t index)>;

struct RecordedRequest {
    std::string path;
    std::string body;
    std::string authorization;
};

/// Loopback HTTP server speaking the chat-completions wire format. A script
/// is served in order; once exhausted every request gets HTTP 500 with the
/// exhaustion marker. All request bodies are recorded.
class MockChatServer {
public:
    /// Throws ParameterError on an empty script.
    explicit MockChatServer(std::vector<MockReply> script);
    explicit MockChatServer(MockHandler handler);
    ~MockChatServer();

    MockChatServer(const MockChatServer&) = delete;
    MockChatServer& operator=(const MockChatServer&) = delete;

    int port() const noexcept { return port_; }
    /// http://127.0.0.1:<port>
    std::string base_url() const;

    std::vector<RecordedRequest> requests() const;
    std::size_t request_count() const;

private:
    void start();
    MockReply next_reply(const std::string& body);

    MockHandler handler_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mutex_;
    std::vector<RecordedRequest> requests_;
};

}  // namespace pale
