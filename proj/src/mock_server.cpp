#include "pale/mock_server.hpp"

#include <httplib.h>

#include "pale/error.hpp"

namespace pale {

namespace {

std::string completion_body(const MockReply& reply, std::size_t index) {
    nlohmann::ordered_json j;
    j["id"] = "mock-" + std::to_string(index);
    j["object"] = "chat.completion";
    nlohmann::ordered_json message;
    message["role"] = "assistant";
    message["content"] = reply.content;
    nlohmann::ordered_json choice;
    choice["index"] = 0;
    choice["message"] = std::move(message);
    choice["finish_reason"] = reply.finish_reason;
    j["choices"] = nlohmann::ordered_json::array({std::move(choice)});
    j["usage"] = {{"prompt_tokens", 0}, {"completion_tokens", 0}, {"total_tokens", 0}};
    return j.dump();
}

}  // namespace

MockReply MockReply::ok(std::string content) {
    MockReply r;
    r.content = std::move(content);
    return r;
}

MockReply MockReply::failure(int status) {
    MockReply r;
    r.status = status;
    r.raw_body = R"({"error":{"message":"scripted failure"}})";
    return r;
}

MockReply MockReply::raw(int status, std::string body) {
    MockReply r;
    r.status = status;
    r.raw_body = std::move(body);
    return r;
}

MockChatServer::MockChatServer(std::vector<MockReply> script) {
    if (script.empty()) {
        throw ParameterError("mock script must not be empty");
    }
    handler_ = [script = std::move(script)](const nlohmann::json&, std::size_t index) {
        if (index < script.size()) {
            return script[index];
        }
        return MockReply::raw(500, std::string(R"({"error":")") +
                                       std::string(kMockExhaustedMarker) + R"("})");
    };
    start();
}

MockChatServer::MockChatServer(MockHandler handler) : handler_(std::move(handler)) { start(); }

MockChatServer::~MockChatServer() {
    server_->stop();
    if (thread_.joinable()) {
        thread_.join();
    }
}

void MockChatServer::start() {
    server_ = std::make_unique<httplib::Server>();
    server_->Post(R"(.*/chat/completions)", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
        std::size_t index = 0;
        {
            std::lock_guard lock(mutex_);
            index = requests_.size();
            requests_.push_back({req.path, req.body, req.get_header_value("Authorization")});
        }
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::parse_error&) {
            res.status = 400;
            res.set_content(R"({"error":"request body is not JSON"})", "application/json");
            return;
        }
        const MockReply reply = handler_(parsed, index);
        res.status = reply.status;
        res.set_content(reply.raw_body ? *reply.raw_body : completion_body(reply, index),
                        "application/json");
    });
    port_ = server_->bind_to_any_port("127.0.0.1");
    if (port_ <= 0) {
        throw IoError("mock server could not bind a loopback port");
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

std::string MockChatServer::base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
}

std::vector<RecordedRequest> MockChatServer::requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

std::size_t MockChatServer::request_count() const {
    std::lock_guard lock(mutex_);
    return requests_.size();
}

}  // namespace pale
