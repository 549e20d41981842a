#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "harness/clock.hpp"

namespace harness {

struct ModelConfig {
    std::string model_id;
    std::string endpoint;  ///< chat-completion URL, or mock:<name> for an offline backend
    double temperature = 0.0;
    int max_output_tokens = 256;
    int timeout_ms = 30000;
    int max_retries = 2;
    int requests_per_minute = 60;

    void validate() const;
};

struct ModelAnswer {
    std::string text;
    std::string prompt_hash;
    std::int64_t latency_ms = 0;
    bool from_cache = false;
};

/// Stable identity of one request: same model, sampling parameters, and
/// rendered prompt always hash alike, so cache hits survive process restarts.
std::string prompt_hash(const ModelConfig& config, std::string_view rendered);

/// Sliding-window limiter: at most `requests_per_minute` acquisitions in any
/// 60 second window, blocking on the injected clock until a slot frees up.
class RateLimiter {
public:
    RateLimiter(int requests_per_minute, Clock& clock);

    void acquire();

    /// Completed request timestamps currently inside the window.
    std::size_t in_window();

private:
    int limit_;
    Clock& clock_;
    std::mutex mutex_;
    std::deque<Clock::time_point> sent_;
};

/// Disk cache of model answers, keyed by prompt hash. Entries live at
/// <root>/<first two hash hex chars>/<hash>.json and carry a content checksum;
/// a corrupt entry is evicted on read rather than served.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path root);

    std::optional<std::string> lookup(const std::string& hash);
    void store(const std::string& hash, const std::string& text);
    void evict(const std::string& hash);

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path entry_path(const std::string& hash) const;

    std::filesystem::path root_;
    std::mutex mutex_;
};

/// Pluggable transport: takes the rendered prompt, returns the answer text.
/// Throws BackendUnavailable for faults worth retrying and EndpointError for
/// permanent ones.
using BackendFn = std::function<std::string(const ModelConfig&, const std::string& rendered)>;

/// Offline stand-ins, selectable by using their name as ModelConfig.endpoint:
///   mock:echo-answer   answers "The answer is X." for the first [GT:X] marker
///                      in the prompt, "The answer is unknown." otherwise
///   mock:silent        always answers the empty string
///   mock:parrot        repeats the question portion of the prompt
BackendFn make_mock_backend(const std::string& name);

/// HTTP chat-completion transport. Reads the bearer token from the
/// MODEL_API_KEY environment variable when present.
BackendFn make_http_backend();

struct GatewayStats {
    std::size_t requests = 0;
    std::size_t cache_hits = 0;
    std::size_t retries = 0;
    std::size_t failures = 0;
};

/// Front door for model calls: rate limiting, bounded retry with exponential
/// backoff, and an optional persistent response cache.
class ModelGateway {
public:
    ModelGateway(ModelConfig config, Clock& clock, BackendFn backend = nullptr);

    /// Sends the prompt, retrying transient faults up to config.max_retries
    /// times with doubling backoff capped at 30 seconds.
    ModelAnswer complete(const std::string& rendered);

    /// Like complete(), but consults `cache` first and stores the answer back.
    ModelAnswer cached_complete(const std::string& rendered, ResponseCache& cache);

    const ModelConfig& config() const { return config_; }
    GatewayStats stats();

private:
    ModelAnswer attempt_with_retries(const std::string& rendered, const std::string& hash);

    ModelConfig config_;
    Clock& clock_;
    BackendFn backend_;
    RateLimiter limiter_;
    std::mutex stats_mutex_;
    GatewayStats stats_;
};

}  // namespace harness
