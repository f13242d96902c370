#pragma once

#include <stdexcept>
#include <string>

namespace smoa {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- gateway ---

/// Connection failure, timeout, or retryable HTTP status after all
/// attempts were exhausted. Carries the number of attempts actually made.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error(what), attempts_(attempts) {}
    int attempts() const { return attempts_; }

private:
    int attempts_;
};

/// Non-retryable HTTP 4xx (other than 429) with the response body.
class ProviderError : public Error {
public:
    ProviderError(const std::string& what, int status, std::string body)
        : Error(what), status_(status), body_(std::move(body)) {}
    int status() const { return status_; }
    const std::string& body() const { return body_; }

private:
    int status_;
    std::string body_;
};

/// The environment variable named by an endpoint's api_key_ref is unset.
class AuthError : public Error {
public:
    using Error::Error;
};

// --- prompt rendering / parsing ---

class TemplateError : public Error {
public:
    using Error::Error;
};

class EmptyResponsesError : public Error {
public:
    using Error::Error;
};

class BadKError : public Error {
public:
    using Error::Error;
};

class UnparseableVerdictError : public Error {
public:
    using Error::Error;
};

class RoleCountMismatchError : public Error {
public:
    using Error::Error;
};

// --- pipelines ---

class LayerFailedError : public Error {
public:
    using Error::Error;
};

class RunFailedError : public Error {
public:
    using Error::Error;
};

// --- datasets / harness ---

class IoError : public Error {
public:
    using Error::Error;
};

/// A dataset line failed validation; carries the 1-based line number.
class SchemaError : public Error {
public:
    SchemaError(const std::string& what, int line) : Error(what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class GradeParseError : public Error {
public:
    using Error::Error;
};

// --- ledger ---

class DuplicateEventError : public Error {
public:
    using Error::Error;
};

class UnknownEndpointError : public Error {
public:
    using Error::Error;
};

// --- configuration ---

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace smoa
