#include "harness/gateway.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "harness/errors.hpp"
#include "harness/hashing.hpp"

namespace harness {
namespace {

using json = nlohmann::json;

std::string format_double(double v) {
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "%.6g", v);
    return std::string(buf.data());
}

std::string echo_answer_backend(const ModelConfig&, const std::string& rendered) {
    std::size_t open = rendered.find("[GT:");
    if (open != std::string::npos) {
        std::size_t close = rendered.find(']', open + 4);
        if (close != std::string::npos) {
            return "The answer is " + rendered.substr(open + 4, close - open - 4) + ".";
        }
    }
    return "The answer is unknown.";
}

std::string parrot_backend(const ModelConfig&, const std::string& rendered) {
    static constexpr std::string_view kBefore = "Please answer the question ";
    static constexpr std::string_view kAfter = " following the examples";
    std::size_t start = rendered.find(kBefore);
    if (start == std::string::npos) return rendered;
    start += kBefore.size();
    std::size_t end = rendered.find(kAfter, start);
    if (end == std::string::npos) return rendered.substr(start);
    return rendered.substr(start, end - start);
}

struct ParsedUrl {
    std::string origin;  ///< scheme://host[:port]
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint '" + url + "' must start with http:// or https://");
    }
    std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string http_call(const ModelConfig& config, const std::string& rendered) {
    ParsedUrl url = split_url(config.endpoint);
    httplib::Client client(url.origin);
    client.set_connection_timeout(std::chrono::milliseconds(config.timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(config.timeout_ms));
    client.set_write_timeout(std::chrono::milliseconds(config.timeout_ms));

    httplib::Headers headers;
    if (const char* key = std::getenv("MODEL_API_KEY"); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json body;
    body["model"] = config.model_id;
    body["messages"] = json::array({json{{"role", "user"}, {"content", rendered}}});
    body["temperature"] = config.temperature;
    body["max_tokens"] = config.max_output_tokens;

    httplib::Result res = client.Post(url.path, headers, body.dump(), "application/json");
    if (!res) {
        bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                         res.error() == httplib::Error::Read || res.error() == httplib::Error::Write;
        throw BackendUnavailable("endpoint " + url.origin + ": " + httplib::to_string(res.error()),
                                 timed_out);
    }
    if (res->status == 408 || res->status == 429 || res->status >= 500) {
        throw BackendUnavailable("endpoint returned status " + std::to_string(res->status),
                                 res->status == 408);
    }
    if (res->status != 200) {
        throw EndpointError(EndpointError::Kind::unreachable,
                            "endpoint returned status " + std::to_string(res->status), "");
    }
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.is_object()) {
        throw EndpointError(EndpointError::Kind::malformed_response,
                            "endpoint body is not a JSON object", "");
    }
    if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty()) {
        throw EndpointError(EndpointError::Kind::malformed_response,
                            "endpoint reply has no choices", "");
    }
    const json& first = reply["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
        throw EndpointError(EndpointError::Kind::malformed_response,
                            "endpoint reply has no message content", "");
    }
    return first["message"]["content"].get<std::string>();
}

std::string cache_file_body(const std::string& hash, const std::string& text) {
    nlohmann::ordered_json j;
    j["prompt_hash"] = hash;
    j["text"] = text;
    j["checksum"] = sha256_hex(text);
    return j.dump();
}

}  // namespace

void ModelConfig::validate() const {
    if (model_id.empty()) throw ConfigError("model_id must not be empty");
    if (endpoint.empty()) throw ConfigError("model '" + model_id + "': endpoint must not be empty");
    if (temperature < 0.0 || temperature > 2.0) {
        throw ConfigError("model '" + model_id + "': temperature must be in [0, 2]");
    }
    if (max_output_tokens < 1) {
        throw ConfigError("model '" + model_id + "': max_output_tokens must be positive");
    }
    if (timeout_ms < 1) throw ConfigError("model '" + model_id + "': timeout_ms must be positive");
    if (max_retries < 0) {
        throw ConfigError("model '" + model_id + "': max_retries must not be negative");
    }
    if (requests_per_minute < 1) {
        throw ConfigError("model '" + model_id + "': requests_per_minute must be positive");
    }
}

std::string prompt_hash(const ModelConfig& config, std::string_view rendered) {
    std::string material = "v1|" + config.model_id + "|" + format_double(config.temperature) + "|" +
                           std::to_string(config.max_output_tokens) + "|";
    material += rendered;
    return sha256_hex(material);
}

RateLimiter::RateLimiter(int requests_per_minute, Clock& clock)
    : limit_(requests_per_minute), clock_(clock) {
    if (limit_ < 1) throw ConfigError("requests_per_minute must be positive");
}

void RateLimiter::acquire() {
    using namespace std::chrono_literals;
    for (;;) {
        Clock::time_point wake;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            Clock::time_point now = clock_.now();
            while (!sent_.empty() && now - sent_.front() >= 60s) sent_.pop_front();
            if (sent_.size() < static_cast<std::size_t>(limit_)) {
                sent_.push_back(now);
                return;
            }
            wake = sent_.front() + 60s;
        }
        clock_.sleep_until(wake);
    }
}

std::size_t RateLimiter::in_window() {
    using namespace std::chrono_literals;
    std::lock_guard<std::mutex> lock(mutex_);
    Clock::time_point now = clock_.now();
    while (!sent_.empty() && now - sent_.front() >= 60s) sent_.pop_front();
    return sent_.size();
}

ResponseCache::ResponseCache(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw CacheError("cannot create cache directory " + root_.string() + ": " + ec.message());
}

std::filesystem::path ResponseCache::entry_path(const std::string& hash) const {
    return root_ / hash.substr(0, 2) / (hash + ".json");
}

std::optional<std::string> ResponseCache::lookup(const std::string& hash) {
    if (hash.size() < 3) throw CacheError("prompt hash '" + hash + "' is too short");
    std::lock_guard<std::mutex> lock(mutex_);
    std::filesystem::path path = entry_path(hash);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::stringstream buffer;
    buffer << in.rdbuf();
    json j = json::parse(buffer.str(), nullptr, false);
    bool valid = !j.is_discarded() && j.is_object() && j.contains("prompt_hash") &&
                 j.contains("text") && j.contains("checksum") && j["text"].is_string() &&
                 j["prompt_hash"] == hash;
    if (valid) {
        std::string text = j["text"].get<std::string>();
        if (j["checksum"] == sha256_hex(text)) return text;
    }
    // Damaged entry: drop it so the answer gets recomputed instead of served.
    std::error_code ec;
    std::filesystem::remove(path, ec);
    return std::nullopt;
}

void ResponseCache::store(const std::string& hash, const std::string& text) {
    if (hash.size() < 3) throw CacheError("prompt hash '" + hash + "' is too short");
    std::lock_guard<std::mutex> lock(mutex_);
    std::filesystem::path path = entry_path(hash);
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
        throw CacheError("cannot create cache shard " + path.parent_path().string() + ": " +
                         ec.message());
    }
    // Write-then-rename keeps readers from ever seeing a half-written entry.
    static std::atomic<unsigned> counter{0};
    std::filesystem::path tmp =
        path.parent_path() / (hash + ".tmp" + std::to_string(counter.fetch_add(1)));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CacheError("cannot write cache entry " + tmp.string());
        out << cache_file_body(hash, text);
        if (!out.flush()) throw CacheError("cannot flush cache entry " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw CacheError("cannot publish cache entry " + path.string());
    }
}

void ResponseCache::evict(const std::string& hash) {
    if (hash.size() < 3) throw CacheError("prompt hash '" + hash + "' is too short");
    std::lock_guard<std::mutex> lock(mutex_);
    std::error_code ec;
    std::filesystem::remove(entry_path(hash), ec);
}

BackendFn make_mock_backend(const std::string& name) {
    if (name == "echo-answer") return echo_answer_backend;
    if (name == "silent") return [](const ModelConfig&, const std::string&) { return std::string(); };
    if (name == "parrot") return parrot_backend;
    throw ConfigError("unknown mock backend 'mock:" + name + "'");
}

BackendFn make_http_backend() { return http_call; }

ModelGateway::ModelGateway(ModelConfig config, Clock& clock, BackendFn backend)
    : config_(std::move(config)),
      clock_(clock),
      backend_(std::move(backend)),
      limiter_(config_.requests_per_minute > 0 ? config_.requests_per_minute : 1, clock) {
    config_.validate();
    if (!backend_) {
        if (config_.endpoint.rfind("mock:", 0) == 0) {
            backend_ = make_mock_backend(config_.endpoint.substr(5));
        } else {
            backend_ = make_http_backend();
        }
    }
}

ModelAnswer ModelGateway::complete(const std::string& rendered) {
    return attempt_with_retries(rendered, prompt_hash(config_, rendered));
}

ModelAnswer ModelGateway::cached_complete(const std::string& rendered, ResponseCache& cache) {
    std::string hash = prompt_hash(config_, rendered);
    if (std::optional<std::string> hit = cache.lookup(hash)) {
        std::lock_guard<std::mutex> lock(stats_mutex_);
        ++stats_.cache_hits;
        return ModelAnswer{std::move(*hit), hash, 0, true};
    }
    ModelAnswer answer = attempt_with_retries(rendered, hash);
    cache.store(hash, answer.text);
    return answer;
}

ModelAnswer ModelGateway::attempt_with_retries(const std::string& rendered,
                                               const std::string& hash) {
    using namespace std::chrono;
    for (int attempt = 0;; ++attempt) {
        {
            std::lock_guard<std::mutex> lock(stats_mutex_);
            ++stats_.requests;
        }
        limiter_.acquire();
        Clock::time_point start = clock_.now();
        try {
            std::string text = backend_(config_, rendered);
            auto latency = duration_cast<milliseconds>(clock_.now() - start).count();
            return ModelAnswer{std::move(text), hash, latency, false};
        } catch (const BackendUnavailable& e) {
            if (attempt >= config_.max_retries) {
                std::lock_guard<std::mutex> lock(stats_mutex_);
                ++stats_.failures;
                throw EndpointError(e.timed_out() ? EndpointError::Kind::timeout
                                                  : EndpointError::Kind::unreachable,
                                    std::string(e.what()) + " (after " +
                                        std::to_string(attempt + 1) + " attempts)",
                                    hash);
            }
            {
                std::lock_guard<std::mutex> lock(stats_mutex_);
                ++stats_.retries;
            }
            auto backoff = milliseconds(500) * (1 << attempt);
            clock_.sleep_for(std::min<Clock::duration>(backoff, seconds(30)));
        } catch (const EndpointError& e) {
            std::lock_guard<std::mutex> lock(stats_mutex_);
            ++stats_.failures;
            throw EndpointError(e.kind(), e.what(), hash);
        }
    }
}

GatewayStats ModelGateway::stats() {
    std::lock_guard<std::mutex> lock(stats_mutex_);
    return stats_;
}

}  // namespace harness
