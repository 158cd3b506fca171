#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pesa {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// -- domain / codec -----------------------------------------------------

class EmptyTextError : public Error {
public:
    EmptyTextError() : Error("text has no non-blank content") {}
};

class InvariantViolation : public Error {
public:
    explicit InvariantViolation(const std::string& what)
        : Error("invariant violation: " + what) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t byte_offset = 0)
        : Error("parse error: " + what), byte_offset(byte_offset) {}
    std::size_t byte_offset;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io error: " + what) {}
};

// -- llm backend ---------------------------------------------------------

class BackendError : public Error {
public:
    explicit BackendError(const std::string& what) : Error(what) {}
};

class TimeoutError : public BackendError {
public:
    explicit TimeoutError(const std::string& what = "request timed out")
        : BackendError(what) {}
};

class HttpStatusError : public BackendError {
public:
    HttpStatusError(int code, const std::string& body_excerpt)
        : BackendError("http status " + std::to_string(code) +
                       (body_excerpt.empty() ? "" : ": " + body_excerpt)),
          code(code),
          body_excerpt(body_excerpt) {}
    int code;  // 0 when the transport failed before any HTTP status arrived
    std::string body_excerpt;
};

class MalformedResponse : public BackendError {
public:
    explicit MalformedResponse(const std::string& what)
        : BackendError("malformed response: " + what) {}
};

class MissingApiKey : public BackendError {
public:
    explicit MissingApiKey(const std::string& env_var)
        : BackendError("api key environment variable not set: " + env_var) {}
};

class RetriesExhausted : public BackendError {
public:
    RetriesExhausted(std::size_t attempts, const std::string& last_error)
        : BackendError("retries exhausted after " + std::to_string(attempts) +
                       " attempts; last error: " + last_error),
          attempts(attempts),
          last_error(last_error) {}
    std::size_t attempts;
    std::string last_error;
};

class ScriptExhausted : public BackendError {
public:
    ScriptExhausted() : BackendError("mock script exhausted") {}
};

class UnknownTag : public BackendError {
public:
    explicit UnknownTag(const std::string& tag)
        : BackendError("mock script has no entry for tag: " + tag), tag(tag) {}
    std::string tag;
};

// -- annotation / pipeline stages -----------------------------------------

class EmptyAnnotation : public Error {
public:
    explicit EmptyAnnotation(std::size_t index)
        : Error("empty annotation at index " + std::to_string(index)),
          index(index) {}
    std::size_t index;
};

class CountMismatch : public Error {
public:
    CountMismatch(std::size_t expected, std::size_t actual)
        : Error("item count mismatch: expected " + std::to_string(expected) +
                ", got " + std::to_string(actual)),
          expected(expected),
          actual(actual) {}
    std::size_t expected;
    std::size_t actual;
};

class EmptyGeneration : public Error {
public:
    EmptyGeneration() : Error("model returned empty generation") {}
};

// -- evaluation ------------------------------------------------------------

class NoScoreFound : public Error {
public:
    NoScoreFound() : Error("no score of the form N/100 found in judgment") {}
};

class OutOfRange : public Error {
public:
    OutOfRange(double value, const std::string& context)
        : Error("value out of range: " + std::to_string(value) + " (" + context + ")"),
          value(value) {}
    double value;
};

class JudgeFailure : public Error {
public:
    explicit JudgeFailure(const std::string& metric)
        : Error("judge failed to produce a score for metric: " + metric),
          metric(metric) {}
    std::string metric;
};

class EmptyCorpus : public Error {
public:
    EmptyCorpus() : Error("corpus is empty") {}
};

class EmptyVerdicts : public Error {
public:
    EmptyVerdicts() : Error("no verdicts to tally") {}
};

class MixedPairs : public Error {
public:
    explicit MixedPairs(const std::string& what)
        : Error("verdicts reference mixed system pairs: " + what) {}
};

// -- dataset io --------------------------------------------------------------

class EmptyFieldError : public Error {
public:
    EmptyFieldError(std::size_t line, const std::string& field)
        : Error("empty field '" + field + "' at line " + std::to_string(line)),
          line(line),
          field(field) {}
    std::size_t line;
    std::string field;
};

class SplitSizeMismatch : public Error {
public:
    SplitSizeMismatch(const std::string& split, std::size_t expected, std::size_t actual)
        : Error("split '" + split + "' has " + std::to_string(actual) +
                " pairs, expected " + std::to_string(expected)),
          expected(expected),
          actual(actual) {}
    std::size_t expected;
    std::size_t actual;
};

// -- configuration ------------------------------------------------------------

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config error: " + what) {}
};

class TemplateError : public Error {
public:
    explicit TemplateError(const std::string& what) : Error("template error: " + what) {}
};

}  // namespace pesa
