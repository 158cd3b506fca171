#pragma once

#include <chrono>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pesa/domain.hpp"
#include "pesa/errors.hpp"

namespace pesa {

struct GenerationRequest {
    std::optional<std::string> system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_new_tokens = 1024;
    std::vector<std::string> stop_sequences;
    std::string request_tag;  // claims | grounds | essay | annotate_grounds |
                              // annotate_claims | judge

    void validate() const {
        if (is_blank(user_text)) throw InvariantViolation("request user_text is empty");
        if (temperature < 0.0 || temperature > 2.0)
            throw InvariantViolation("temperature outside [0, 2]");
        if (max_new_tokens < 1) throw InvariantViolation("max_new_tokens < 1");
    }
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

enum class FinishReason { stop, length, error };

struct GenerationResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
    std::optional<TokenUsage> usage;
};

struct BackendConfig {
    std::string base_url;       // e.g. http://localhost:8000/v1
    std::string model_name;
    std::string api_key_env;    // empty: endpoint requires no key
    double timeout_s = 60.0;
    int max_retries = 3;
    double retry_backoff_s = 0.5;

    void validate() const {
        if (base_url.empty()) throw InvariantViolation("base_url is empty");
        if (timeout_s <= 0.0) throw InvariantViolation("timeout_s must be positive");
        if (max_retries < 0 || max_retries > 10)
            throw InvariantViolation("max_retries outside [0, 10]");
        if (retry_backoff_s <= 0.0)
            throw InvariantViolation("retry_backoff_s must be positive");
    }
};

/// Uniform client surface for text-generation endpoints, real and mock.
/// One complete() call is exactly one round trip; retries live outside.
class Backend {
public:
    virtual ~Backend() = default;
    virtual GenerationResponse complete(const GenerationRequest& request) = 0;
    virtual const std::string& model_name() const = 0;
};

// -- HTTP backend (chat-completions dialect) --------------------------------

namespace detail {

// Splits "http://host:port/v1" into client target and path prefix.
inline std::pair<std::string, std::string> split_base_url(const std::string& url) {
    auto scheme_end = url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

}  // namespace detail

class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig config, std::ostream* log = nullptr)
        : config_(std::move(config)), log_(log) {
        config_.validate();
    }

    const BackendConfig& config() const { return config_; }
    const std::string& model_name() const override { return config_.model_name; }

    GenerationResponse complete(const GenerationRequest& request) override {
        request.validate();
        std::string api_key = resolve_api_key();

        nlohmann::json messages = nlohmann::json::array();
        if (request.system_text && !request.system_text->empty())
            messages.push_back({{"role", "system"}, {"content", *request.system_text}});
        messages.push_back({{"role", "user"}, {"content", request.user_text}});

        nlohmann::json payload{{"model", config_.model_name},
                               {"messages", messages},
                               {"temperature", request.temperature},
                               {"max_tokens", request.max_new_tokens}};
        if (!request.stop_sequences.empty()) payload["stop"] = request.stop_sequences;

        auto [target, prefix] = detail::split_base_url(config_.base_url);
        httplib::Client client(target);
        auto timeout = std::chrono::duration<double>(config_.timeout_s);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

        auto res = client.Post(prefix + "/chat/completions", headers, payload.dump(),
                               "application/json");
        if (!res) {
            auto err = res.error();
            log_attempt(request.request_tag, "transport: " + httplib::to_string(err));
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                err == httplib::Error::Write)
                throw TimeoutError("no response within " +
                                   std::to_string(config_.timeout_s) + "s (" +
                                   httplib::to_string(err) + ")");
            throw HttpStatusError(0, httplib::to_string(err));
        }
        log_attempt(request.request_tag, "status " + std::to_string(res->status));
        if (res->status != 200)
            throw HttpStatusError(res->status, res->body.substr(0, 200));
        return parse_response(res->body);
    }

    static GenerationResponse parse_response(const std::string& body) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            throw MalformedResponse(e.what());
        }
        if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
            throw MalformedResponse("no choices in response");
        const auto& choice = j["choices"][0];
        if (!choice.contains("message") || !choice["message"].contains("content") ||
            !choice["message"]["content"].is_string())
            throw MalformedResponse("first choice has no message content");

        GenerationResponse out;
        out.text = choice["message"]["content"].get<std::string>();
        std::string reason = choice.value("finish_reason", "stop");
        if (reason == "stop")
            out.finish_reason = FinishReason::stop;
        else if (reason == "length")
            out.finish_reason = FinishReason::length;
        else
            out.finish_reason = FinishReason::error;
        // Empty content with finish_reason=stop is treated as truncation so the
        // stop-implies-nonempty invariant holds uniformly.
        if (out.text.empty() && out.finish_reason == FinishReason::stop)
            out.finish_reason = FinishReason::length;
        if (j.contains("usage") && j["usage"].is_object()) {
            TokenUsage u;
            u.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
            u.completion_tokens = j["usage"].value("completion_tokens", 0L);
            out.usage = u;
        }
        return out;
    }

private:
    std::string resolve_api_key() const {
        if (config_.api_key_env.empty()) return "";
        const char* v = std::getenv(config_.api_key_env.c_str());
        if (v == nullptr || *v == '\0') throw MissingApiKey(config_.api_key_env);
        return v;
    }

    void log_attempt(const std::string& tag, const std::string& outcome) const {
        if (log_ != nullptr)
            *log_ << "[" << tag << "] " << config_.model_name << " " << outcome << "\n";
    }

    BackendConfig config_;
    std::ostream* log_;
};

// -- mock backend --------------------------------------------------------------

/// A scripted fault for the mock transport.
struct MockFault {
    enum class Kind { Timeout, Http, Malformed };
    Kind kind = Kind::Timeout;
    int http_code = 500;
    std::string body;
};

using MockEntry = std::variant<std::string, MockFault>;

/// Deterministic response script: either an ordered queue consumed one entry
/// per call, or a table keyed by request_tag that answers the same entry every
/// time.
struct MockScript {
    enum class Mode { Queue, Table };
    Mode mode = Mode::Queue;
    std::vector<std::pair<std::string, MockEntry>> entries;  // (tag, entry)

    static MockScript queue(std::vector<MockEntry> items) {
        MockScript s;
        for (auto& e : items) s.entries.emplace_back("*", std::move(e));
        return s;
    }

    static MockScript table(std::vector<std::pair<std::string, MockEntry>> items) {
        MockScript s;
        s.mode = Mode::Table;
        s.entries = std::move(items);
        for (std::size_t i = 0; i < s.entries.size(); ++i)
            for (std::size_t k = i + 1; k < s.entries.size(); ++k)
                if (s.entries[i].first == s.entries[k].first)
                    throw ParseError("duplicate tag in table script: " +
                                     s.entries[i].first);
        return s;
    }
};

namespace detail {

inline std::string unescape_scenario_text(std::string_view in) {
    std::string out;
    out.reserve(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i] == '\\' && i + 1 < in.size()) {
            char c = in[i + 1];
            if (c == 'n') {
                out += '\n';
                ++i;
                continue;
            }
            if (c == 't') {
                out += '\t';
                ++i;
                continue;
            }
            if (c == '\\') {
                out += '\\';
                ++i;
                continue;
            }
        }
        out += in[i];
    }
    return out;
}

inline MockEntry parse_scenario_payload(const std::string& payload) {
    if (payload.empty() || payload[0] != '!') return unescape_scenario_text(payload);
    std::string body = payload.substr(1);
    if (body == "timeout") return MockFault{MockFault::Kind::Timeout, 0, ""};
    if (body == "malformed") return MockFault{MockFault::Kind::Malformed, 0, ""};
    if (body.rfind("http", 0) == 0) {
        std::string rest = trim(body.substr(4));
        std::size_t sp = rest.find(' ');
        std::string code_str = sp == std::string::npos ? rest : rest.substr(0, sp);
        std::string fault_body = sp == std::string::npos ? "" : trim(rest.substr(sp + 1));
        try {
            return MockFault{MockFault::Kind::Http, std::stoi(code_str), fault_body};
        } catch (const std::exception&) {
            throw ParseError("bad http fault code: " + code_str);
        }
    }
    throw ParseError("unknown fault directive: !" + body);
}

}  // namespace detail

/// Loads a scenario file: optional leading `mode queue|table` directive, then
/// one `tag | payload` entry per line. `#` lines and blanks are ignored;
/// payloads support \n, \t and \\ escapes; payloads starting with `!` are
/// faults (!timeout, !malformed, !http CODE [body]).
inline MockScript load_mock_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file: " + path);
    MockScript script;
    std::vector<std::pair<std::string, MockEntry>> entries;
    std::string line;
    std::size_t line_no = 0;
    bool mode_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!mode_seen && t.rfind("mode", 0) == 0 && t.find('|') == std::string::npos) {
            std::string m = trim(t.substr(4));
            if (m == "queue")
                script.mode = MockScript::Mode::Queue;
            else if (m == "table")
                script.mode = MockScript::Mode::Table;
            else
                throw ParseError("bad mode directive at line " + std::to_string(line_no));
            mode_seen = true;
            continue;
        }
        mode_seen = true;
        auto bar = line.find('|');
        if (bar == std::string::npos)
            throw ParseError("missing '|' at line " + std::to_string(line_no));
        std::string tag = trim(line.substr(0, bar));
        std::string payload = line.substr(bar + 1);
        if (!payload.empty() && payload.front() == ' ') payload.erase(0, 1);
        if (tag.empty()) throw ParseError("empty tag at line " + std::to_string(line_no));
        entries.emplace_back(tag, detail::parse_scenario_payload(payload));
    }
    if (script.mode == MockScript::Mode::Table) return MockScript::table(std::move(entries));
    script.entries = std::move(entries);
    return script;
}

/// Deterministic test double. Same script and request sequence always produce
/// identical responses. Thread-safe; records every request it sees.
class MockBackend : public Backend {
public:
    explicit MockBackend(MockScript script, std::string model_name = "mock-model")
        : script_(std::move(script)), model_name_(std::move(model_name)) {}

    const std::string& model_name() const override { return model_name_; }

    GenerationResponse complete(const GenerationRequest& request) override {
        request.validate();
        std::lock_guard<std::mutex> lock(mu_);
        calls_.push_back(request);
        const MockEntry* entry = nullptr;
        if (script_.mode == MockScript::Mode::Queue) {
            if (next_ >= script_.entries.size()) throw ScriptExhausted();
            entry = &script_.entries[next_++].second;
        } else {
            for (const auto& [tag, e] : script_.entries)
                if (tag == request.request_tag || tag == "*") {
                    entry = &e;
                    break;
                }
            if (entry == nullptr) throw UnknownTag(request.request_tag);
        }
        if (const auto* fault = std::get_if<MockFault>(entry)) {
            switch (fault->kind) {
                case MockFault::Kind::Timeout:
                    throw TimeoutError("scripted timeout");
                case MockFault::Kind::Http:
                    throw HttpStatusError(fault->http_code, fault->body);
                case MockFault::Kind::Malformed:
                    throw MalformedResponse("scripted malformed body");
            }
        }
        GenerationResponse out;
        out.text = std::get<std::string>(*entry);
        out.finish_reason = out.text.empty() ? FinishReason::length : FinishReason::stop;
        return out;
    }

    std::size_t call_count() const {
        std::lock_guard<std::mutex> lock(mu_);
        return calls_.size();
    }

    std::size_t call_count(const std::string& tag) const {
        std::lock_guard<std::mutex> lock(mu_);
        std::size_t n = 0;
        for (const auto& c : calls_)
            if (c.request_tag == tag) ++n;
        return n;
    }

    std::vector<GenerationRequest> calls() const {
        std::lock_guard<std::mutex> lock(mu_);
        return calls_;
    }

private:
    mutable std::mutex mu_;
    MockScript script_;
    std::size_t next_ = 0;
    std::vector<GenerationRequest> calls_;
    std::string model_name_;
};

// -- retry -----------------------------------------------------------------------

struct RetryPolicy {
    int max_retries = 0;          // extra attempts beyond the first
    double backoff_s = 0.5;       // exponential base

    static RetryPolicy from_config(const BackendConfig& c) {
        return {c.max_retries, c.retry_backoff_s};
    }
};

inline bool is_retryable(const BackendError& e) {
    if (dynamic_cast<const TimeoutError*>(&e) != nullptr) return true;
    if (const auto* h = dynamic_cast<const HttpStatusError*>(&e))
        return h->code == 429 || (h->code >= 500 && h->code <= 599);
    return false;
}

/// Retries complete() on timeouts and on HTTP 429/5xx, with exponential
/// backoff. Total attempts never exceed 1 + max_retries; the first success is
/// returned; non-retryable errors propagate immediately.
inline GenerationResponse complete_with_retry(Backend& backend,
                                              const GenerationRequest& request,
                                              const RetryPolicy& policy) {
    std::string last_error;
    for (int attempt = 0;; ++attempt) {
        try {
            return backend.complete(request);
        } catch (const BackendError& e) {
            if (!is_retryable(e)) throw;
            last_error = e.what();
            if (attempt >= policy.max_retries)
                throw RetriesExhausted(static_cast<std::size_t>(attempt) + 1, last_error);
        }
        auto delay = std::chrono::duration<double>(
            policy.backoff_s * static_cast<double>(1 << std::min(attempt, 20)));
        std::this_thread::sleep_for(delay);
    }
}

}  // namespace pesa
