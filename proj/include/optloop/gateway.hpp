#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace optloop {

// ---------------------------------------------------------------------------
// Exchange record
// ---------------------------------------------------------------------------

enum class TransportStatus { Ok, Timeout, AuthFailure, TransportError };

inline const char* transport_status_name(TransportStatus s) {
    switch (s) {
        case TransportStatus::Ok: return "ok";
        case TransportStatus::Timeout: return "timeout";
        case TransportStatus::AuthFailure: return "auth_failure";
        case TransportStatus::TransportError: return "transport_error";
    }
    return "?";
}

struct ChatExchange {
    std::string prompt;
    std::string response;  // present iff status == Ok
    std::string model_id;
    double latency_ms = 0.0;
    long prompt_tokens = -1;
    long completion_tokens = -1;
    TransportStatus status = TransportStatus::Ok;
    int http_status = 0;
    std::string error;
    int attempts = 1;

    bool ok() const { return status == TransportStatus::Ok; }
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual ChatExchange complete(const std::string& prompt, double temperature) = 0;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible HTTP client
// ---------------------------------------------------------------------------

struct GatewayConfig {
    std::string endpoint;  // base URL, e.g. http://localhost:8089/v1
    std::string api_key;
    std::string model;
    double timeout_sec = 120.0;
    int max_attempts = 3;           // transient transport failures only
    double backoff_initial_ms = 250.0;  // doubled per retry
};

namespace gateway_detail {

struct ParsedUrl {
    std::string host_port;  // scheme://host:port
    std::string base_path;  // path prefix without trailing slash
};

inline ParsedUrl parse_base_url(const std::string& url) {
    ParsedUrl out;
    auto scheme_end = url.find("://");
    size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) {
        out.host_port = url;
        out.base_path = "";
    } else {
        out.host_port = url.substr(0, path_start);
        out.base_path = url.substr(path_start);
        while (!out.base_path.empty() && out.base_path.back() == '/') out.base_path.pop_back();
    }
    return out;
}

}  // namespace gateway_detail

class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(GatewayConfig config) : config_(std::move(config)) {}

    ChatExchange complete(const std::string& prompt, double temperature) override {
        ChatExchange ex;
        ex.prompt = prompt;
        auto url = gateway_detail::parse_base_url(config_.endpoint);
        nlohmann::json body = {
            {"model", config_.model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
            {"temperature", temperature},
        };
        std::string payload = body.dump();
        auto t0 = std::chrono::steady_clock::now();

        double backoff = config_.backoff_initial_ms;
        for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
            ex.attempts = attempt;
            httplib::Client cli(url.host_port);
            cli.set_connection_timeout(std::chrono::milliseconds(
                static_cast<long>(config_.timeout_sec * 1000)));
            cli.set_read_timeout(
                std::chrono::milliseconds(static_cast<long>(config_.timeout_sec * 1000)));
            httplib::Headers headers;
            if (!config_.api_key.empty())
                headers.emplace("Authorization", "Bearer " + config_.api_key);
            auto res = cli.Post(url.base_path + "/chat/completions", headers, payload,
                                "application/json");
            ex.latency_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
            if (!res) {
                bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                                 res.error() == httplib::Error::Read;
                ex.status = timed_out ? TransportStatus::Timeout
                                      : TransportStatus::TransportError;
                ex.error = "transport: " + httplib::to_string(res.error());
            } else {
                ex.http_status = res->status;
                if (res->status == 401 || res->status == 403) {
                    ex.status = TransportStatus::AuthFailure;
                    ex.error = "authentication failed (HTTP " + std::to_string(res->status) + ")";
                    return ex;  // never retried
                }
                if (res->status >= 200 && res->status < 300) {
                    return parse_success(ex, res->body);
                }
                ex.status = TransportStatus::TransportError;
                ex.error = "HTTP " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 512);
                bool retryable = res->status >= 500 || res->status == 429 ||
                                 res->status == 408;
                if (!retryable) return ex;
            }
            if (attempt < config_.max_attempts) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(static_cast<long>(backoff)));
                backoff *= 2.0;
            }
        }
        return ex;
    }

private:
    ChatExchange& parse_success(ChatExchange& ex, const std::string& body) {
        auto j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() ||
            j["choices"].empty()) {
            ex.status = TransportStatus::TransportError;
            ex.error = "malformed completion payload";
            return ex;
        }
        const auto& choice = j["choices"][0];
        if (choice.contains("message") && choice["message"].contains("content"))
            ex.response = choice["message"]["content"].get<std::string>();
        ex.model_id = j.value("model", std::string{});
        if (j.contains("usage")) {
            ex.prompt_tokens = j["usage"].value("prompt_tokens", -1);
            ex.completion_tokens = j["usage"].value("completion_tokens", -1);
        }
        ex.status = TransportStatus::Ok;
        ex.error.clear();
        return ex;
    }

    GatewayConfig config_;
};

// ---------------------------------------------------------------------------
// Scripted mock client
// ---------------------------------------------------------------------------

// Script entries are matched first-to-last against the prompt; an entry with
// a use budget is skipped once exhausted. `uses` < 0 means unlimited.
struct MockScriptEntry {
    std::string match_substring;  // empty = matches any prompt
    std::string response;
    int uses = -1;
};

class MockChatClient : public ChatClient {
public:
    MockChatClient() = default;
    explicit MockChatClient(std::vector<MockScriptEntry> script) : script_(std::move(script)) {}

    static std::vector<MockScriptEntry> parse_script(const nlohmann::json& j) {
        if (!j.is_array()) throw std::runtime_error("mock script must be a JSON array");
        std::vector<MockScriptEntry> script;
        for (const auto& e : j) {
            MockScriptEntry entry;
            entry.match_substring = e.value("match_substring", std::string{});
            if (!e.contains("response"))
                throw std::runtime_error("mock script entry needs 'response'");
            entry.response = e["response"].get<std::string>();
            entry.uses = e.value("uses", -1);
            script.push_back(std::move(entry));
        }
        return script;
    }

    static std::vector<MockScriptEntry> load_script(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open mock script: " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        auto j = nlohmann::json::parse(ss.str(), nullptr, false);
        if (j.is_discarded()) throw std::runtime_error("mock script is not valid JSON: " + path);
        return parse_script(j);
    }

    ChatExchange complete(const std::string& prompt, double /*temperature*/) override {
        std::lock_guard<std::mutex> lock(mutex_);
        ChatExchange ex;
        ex.prompt = prompt;
        ex.model_id = "mock";
        for (auto& entry : script_) {
            if (entry.uses == 0) continue;
            if (!entry.match_substring.empty() &&
                prompt.find(entry.match_substring) == std::string::npos)
                continue;
            if (entry.uses > 0) --entry.uses;
            ex.response = entry.response;
            ex.status = TransportStatus::Ok;
            ++calls_;
            return ex;
        }
        ex.status = TransportStatus::TransportError;
        ex.error = "mock: no script entry matches prompt";
        ++calls_;
        return ex;
    }

    long calls() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return calls_;
    }

private:
    mutable std::mutex mutex_;
    std::vector<MockScriptEntry> script_;
    long calls_ = 0;
};

// ---------------------------------------------------------------------------
// Rate limiting
// ---------------------------------------------------------------------------

// Bounds in-flight requests and requests per minute across threads.
class RateLimiter {
public:
    RateLimiter(int max_concurrent, int per_minute)
        : max_concurrent_(max_concurrent), per_minute_(per_minute) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] {
            prune();
            return active_ < max_concurrent_ &&
                   static_cast<int>(stamps_.size()) < per_minute_;
        });
        ++active_;
        stamps_.push_back(std::chrono::steady_clock::now());
    }

    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            --active_;
        }
        cv_.notify_all();
    }

private:
    void prune() {
        auto cutoff = std::chrono::steady_clock::now() - std::chrono::minutes(1);
        while (!stamps_.empty() && stamps_.front() < cutoff) stamps_.pop_front();
    }

    std::mutex mutex_;
    std::condition_variable cv_;
    int max_concurrent_;
    int per_minute_;
    int active_ = 0;
    std::deque<std::chrono::steady_clock::time_point> stamps_;
};

// Decorator serializing excess callers through a shared limiter.
class LimitedChatClient : public ChatClient {
public:
    LimitedChatClient(ChatClient& inner, std::shared_ptr<RateLimiter> limiter)
        : inner_(inner), limiter_(std::move(limiter)) {}

    ChatExchange complete(const std::string& prompt, double temperature) override {
        if (!limiter_) return inner_.complete(prompt, temperature);
        limiter_->acquire();
        ChatExchange ex = inner_.complete(prompt, temperature);
        limiter_->release();
        return ex;
    }

private:
    ChatClient& inner_;
    std::shared_ptr<RateLimiter> limiter_;
};

}  // namespace optloop
