#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace pale {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::optional<int> max_tokens;

    /// Throws ParameterError on an empty message list or negative temperature.
    void validate() const;
};

/// Wire body with fixed key order: model, messages, temperature, max_tokens
/// (omitted when unset). Equal requests serialize to equal bytes.
std::string serialize_request(const ChatRequest& req);

struct Usage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t total_tokens = 0;
};

struct ChatResponse {
    std::string content;
    std::string finish_reason;
    Usage usage;
    std::chrono::milliseconds latency{0};
    int attempts = 1;
};

/// Parses an OpenAI-style chat completion body and returns the first
/// choice. Throws ProtocolError when `choices` or the message is missing.
ChatResponse parse_chat_response(std::string_view body);

class LlmClient {
public:
    virtual ~LlmClient() = default;

    /// One request. Throws TransportError (retryable), RequestError (fatal
    /// 4xx) or ProtocolError.
    virtual ChatResponse complete(const ChatRequest& req) = 0;
};

struct Endpoint {
    std::string base_url;  // e.g. https://api.openai.com/v1
    std::string api_key;   // empty: no Authorization header
    std::chrono::seconds timeout{60};
};

/// Reads the API key from `key_env_var`; the key stays empty when unset.
Endpoint endpoint_from_env(std::string base_url, const std::string& key_env_var);

/// POSTs to <base_url>/chat/completions with bearer authorization. At most
/// `max_in_flight` requests run concurrently across threads sharing the client.
class HttpChatClient : public LlmClient {
public:
    explicit HttpChatClient(Endpoint endpoint, std::ptrdiff_t max_in_flight = 8);

    ChatResponse complete(const ChatRequest& req) override;

    const Endpoint& endpoint() const noexcept { return endpoint_; }

private:
    Endpoint endpoint_;
    std::string scheme_host_port_;
    std::string path_;
    std::counting_semaphore<> in_flight_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Exponential backoff with full jitter: before retry n (1-based) the caller
/// sleeps uniform[0, base * factor^(n-1)], capped at max_delay.
struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{1000};
    double factor = 2.0;
    std::chrono::milliseconds max_delay{60000};
    std::uint64_t seed = 0;
    Sleeper sleep;  // defaults to std::this_thread::sleep_for

    void validate() const;
};

class Backoff {
public:
    explicit Backoff(const RetryPolicy& policy);

    /// Jittered delay before retry number `retry` (1-based).
    std::chrono::milliseconds delay(int retry);
    void sleep(std::chrono::milliseconds d) const;

private:
    RetryPolicy policy_;
    std::mutex mutex_;
    std::mt19937_64 rng_;
};

/// Retries `inner` on TransportError per the policy; RequestError and
/// ProtocolError propagate immediately. The returned response carries the
/// attempt count and the latency summed over attempts.
class RetryingClient : public LlmClient {
public:
    RetryingClient(LlmClient& inner, RetryPolicy policy);

    ChatResponse complete(const ChatRequest& req) override;

private:
    LlmClient& inner_;
    int max_attempts_;
    Backoff backoff_;
};

}  // namespace pale
