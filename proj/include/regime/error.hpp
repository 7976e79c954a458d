#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace regime {

/// Broad failure category; maps onto CLI exit codes.
enum class ErrorKind {
    Config = 2,
    Data = 3,
    Numerical = 4,
};

/// Library exception. `code` is a short stable identifier such as
/// "DuplicateDate" that tests and callers can match on.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)), message_(message) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& code() const noexcept { return code_; }
    const std::string& message() const noexcept { return message_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
    std::string code_;
    std::string message_;
};

inline Error data_error(std::string code, const std::string& message) {
    return Error(ErrorKind::Data, std::move(code), message);
}

inline Error config_error(std::string code, const std::string& message) {
    return Error(ErrorKind::Config, std::move(code), message);
}

inline Error numerical_error(std::string code, const std::string& message) {
    return Error(ErrorKind::Numerical, std::move(code), message);
}

}  // namespace regime
