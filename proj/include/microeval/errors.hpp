#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace microeval {

// Failure taxonomy shared by the whole harness. The CLI maps these onto
// process exit codes: usage/config 1, data 2, backend 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent dataset / template / report inputs.
class DataError : public Error {
public:
    using Error::Error;
};

// A caller violated an operation's stated precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    enum class Kind {
        Transport,    // connection-level failure, always retryable
        Http,         // non-success HTTP status; retryable only for 429/5xx
        Protocol,     // endpoint replied with a body we cannot interpret
        Unsupported,  // endpoint lacks the capability (e.g. token scoring)
    };

    BackendError(Kind kind, std::string message, int status = 0, std::string body = {})
        : Error(std::move(message)), kind_(kind), status_(status), body_(std::move(body)) {}

    Kind kind() const { return kind_; }
    int status() const { return status_; }
    const std::string& body() const { return body_; }

    bool retryable() const {
        if (kind_ == Kind::Transport) return true;
        if (kind_ == Kind::Http) return status_ == 429 || status_ >= 500;
        return false;
    }

private:
    Kind kind_;
    int status_;
    std::string body_;
};

}  // namespace microeval
