#pragma once

#include <stdexcept>
#include <string>

namespace ecd {

/// Failure categories. The CLI maps each to its exit code.
enum class ErrorKind {
    kInput = 2,       // unreadable or malformed input
    kDomain = 3,      // well-formed input the metric cannot score
    kDegenerate = 4,  // data too degenerate for estimation
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::kInput, what) {}
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::kDomain, what) {}
};

class DegenerateError : public Error {
public:
    explicit DegenerateError(const std::string& what) : Error(ErrorKind::kDegenerate, what) {}
};

}  // namespace ecd
