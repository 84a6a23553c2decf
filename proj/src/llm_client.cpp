#include "pale/llm_client.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pale/error.hpp"

namespace pale {

namespace {

// Error-message excerpt of a response body with any echo of the key masked.
std::string snippet(std::string body, const std::string& secret) {
    constexpr std::string_view kMask = "[redacted]";
    if (!secret.empty()) {
        for (auto pos = body.find(secret); pos != std::string::npos;
             pos = body.find(secret, pos + kMask.size())) {
            body.replace(pos, secret.size(), kMask);
        }
    }
    constexpr std::size_t kMax = 200;
    return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

// Releases a semaphore slot on scope exit.
class SlotGuard {
public:
    explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
    ~SlotGuard() { sem_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    std::counting_semaphore<>& sem_;
};

}  // namespace

std::string_view to_string(Role role) {
    switch (role) {
        case Role::System:
            return "system";
        case Role::User:
            return "user";
        case Role::Assistant:
            return "assistant";
    }
    return "user";
}

void ChatRequest::validate() const {
    if (messages.empty()) {
        throw ParameterError("chat request needs at least one message");
    }
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
        throw ParameterError("temperature must be a finite value >= 0");
    }
    if (max_tokens && *max_tokens < 1) {
        throw ParameterError("max_tokens must be >= 1");
    }
}

std::string serialize_request(const ChatRequest& req) {
    nlohmann::ordered_json j;
    j["model"] = req.model;
    auto messages = nlohmann::ordered_json::array();
    for (const auto& m : req.messages) {
        nlohmann::ordered_json msg;
        msg["role"] = std::string(to_string(m.role));
        msg["content"] = m.content;
        messages.push_back(std::move(msg));
    }
    j["messages"] = std::move(messages);
    j["temperature"] = req.temperature;
    if (req.max_tokens) {
        j["max_tokens"] = *req.max_tokens;
    }
    return j.dump();
}

ChatResponse parse_chat_response(std::string_view body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProtocolError(std::string("response is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() ||
        j["choices"].empty()) {
        throw ProtocolError("response has no choices");
    }
    const auto& choice = j["choices"][0];
    ChatResponse out;
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
        out.finish_reason = choice["finish_reason"].get<std::string>();
    }
    const bool has_content = choice.contains("message") && choice["message"].is_object() &&
                             choice["message"].contains("content") &&
                             choice["message"]["content"].is_string();
    if (has_content) {
        out.content = choice["message"]["content"].get<std::string>();
    } else if (out.finish_reason.empty() || out.finish_reason == "stop") {
        throw ProtocolError("first choice has no message content");
    }
    if (j.contains("usage") && j["usage"].is_object()) {
        const auto& u = j["usage"];
        out.usage.prompt_tokens = u.value("prompt_tokens", std::int64_t{0});
        out.usage.completion_tokens = u.value("completion_tokens", std::int64_t{0});
        out.usage.total_tokens = u.value("total_tokens", std::int64_t{0});
    }
    return out;
}

Endpoint endpoint_from_env(std::string base_url, const std::string& key_env_var) {
    Endpoint e;
    e.base_url = std::move(base_url);
    if (const char* key = std::getenv(key_env_var.c_str())) {
        e.api_key = key;
    }
    return e;
}

HttpChatClient::HttpChatClient(Endpoint endpoint, std::ptrdiff_t max_in_flight)
    : endpoint_(std::move(endpoint)), in_flight_(std::max<std::ptrdiff_t>(max_in_flight, 1)) {
    if (max_in_flight < 1) {
        throw ParameterError("max_in_flight must be >= 1");
    }
    std::string url = endpoint_.base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ParameterError("endpoint URL must include a scheme: " + endpoint_.base_url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_ = (path_start == std::string::npos ? std::string() : url.substr(path_start)) +
            "/chat/completions";
}

ChatResponse HttpChatClient::complete(const ChatRequest& req) {
    req.validate();
    const std::string body = serialize_request(req);

    SlotGuard slot(in_flight_);
    httplib::Client cli(scheme_host_port_);
    const auto timeout = std::chrono::duration_cast<std::chrono::seconds>(endpoint_.timeout);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!endpoint_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
    }

    const auto start = std::chrono::steady_clock::now();
    auto res = cli.Post(path_, headers, body, "application/json");
    const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    if (!res) {
        throw TransportError("request to " + scheme_host_port_ + path_ +
                                 " failed: " + httplib::to_string(res.error()),
                             0);
    }
    const int status = res->status;
    if (status == 429 || status >= 500) {
        throw TransportError(
            "HTTP " + std::to_string(status) + ": " + snippet(res->body, endpoint_.api_key),
            status);
    }
    if (status < 200 || status >= 300) {
        throw RequestError(
            "HTTP " + std::to_string(status) + ": " + snippet(res->body, endpoint_.api_key),
            status);
    }
    ChatResponse out = parse_chat_response(res->body);
    out.latency = latency;
    return out;
}

void RetryPolicy::validate() const {
    if (max_attempts < 1) {
        throw ParameterError("max_attempts must be >= 1");
    }
    if (base_delay.count() < 0 || max_delay.count() < 0 || !(factor >= 1.0)) {
        throw ParameterError("retry delays must be >= 0 and factor >= 1");
    }
}

Backoff::Backoff(const RetryPolicy& policy) : policy_(policy), rng_(policy.seed) {
    policy_.validate();
}

std::chrono::milliseconds Backoff::delay(int retry) {
    const double cap = std::min(static_cast<double>(policy_.max_delay.count()),
                                static_cast<double>(policy_.base_delay.count()) *
                                    std::pow(policy_.factor, std::max(retry - 1, 0)));
    const auto upper = static_cast<std::uint64_t>(cap);
    std::lock_guard lock(mutex_);
    return std::chrono::milliseconds(upper == 0 ? 0 : rng_() % (upper + 1));
}

void Backoff::sleep(std::chrono::milliseconds d) const {
    if (policy_.sleep) {
        policy_.sleep(d);
    } else if (d.count() > 0) {
        std::this_thread::sleep_for(d);
    }
}

RetryingClient::RetryingClient(LlmClient& inner, RetryPolicy policy)
    : inner_(inner), max_attempts_(policy.max_attempts), backoff_(policy) {}

ChatResponse RetryingClient::complete(const ChatRequest& req) {
    std::chrono::milliseconds total{0};
    for (int attempt = 1;; ++attempt) {
        const auto start = std::chrono::steady_clock::now();
        try {
            ChatResponse out = inner_.complete(req);
            total += out.latency;
            out.latency = total;
            out.attempts = attempt;
            return out;
        } catch (const TransportError&) {
            total += std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start);
            if (attempt >= max_attempts_) throw;
            backoff_.sleep(backoff_.delay(attempt));
        }
    }
}

}  // namespace pale
