#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace harness {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Input that does not parse at all (invalid JSON, wrong top-level shape).
class MalformedSyntaxError : public Error {
public:
    explicit MalformedSyntaxError(const std::string& what) : Error(what) {}
};

/// Parsed input that violates the schema. `index` names the offending
/// token or record when one is identifiable.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what, std::optional<std::size_t> index = std::nullopt)
        : Error(index ? ("record " + std::to_string(*index) + ": " + what) : what), index_(index) {}

    std::optional<std::size_t> index() const { return index_; }

private:
    std::optional<std::size_t> index_;
};

/// Invalid configuration or option value; messages name the field.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

class InsufficientPoolError : public Error {
public:
    explicit InsufficientPoolError(const std::string& what) : Error(what) {}
};

/// Prompt cannot fit the character budget even with empty OCR text.
class BudgetError : public Error {
public:
    explicit BudgetError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

/// Cache store problem; distinct from endpoint failures so callers can
/// evict and recompute instead of retrying the model.
class CacheError : public Error {
public:
    explicit CacheError(const std::string& what) : Error(what) {}
};

/// Model endpoint failure after retries. Carries the prompt hash so an
/// interrupted run can be resumed against the same cache keys.
class EndpointError : public Error {
public:
    enum class Kind { unreachable, malformed_response, timeout };

    EndpointError(Kind kind, const std::string& what, std::string prompt_hash)
        : Error(what), kind_(kind), prompt_hash_(std::move(prompt_hash)) {}

    Kind kind() const { return kind_; }
    const std::string& prompt_hash() const { return prompt_hash_; }

private:
    Kind kind_;
    std::string prompt_hash_;
};

/// Thrown by backends to signal a transient fault the gateway may retry.
/// `timed_out` distinguishes deadline expiry from plain unreachability once
/// retries are exhausted.
class BackendUnavailable : public Error {
public:
    explicit BackendUnavailable(const std::string& what, bool timed_out = false)
        : Error(what), timed_out_(timed_out) {}

    bool timed_out() const { return timed_out_; }

private:
    bool timed_out_;
};

}  // namespace harness
