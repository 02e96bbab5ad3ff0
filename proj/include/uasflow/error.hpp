#pragma once

#include <stdexcept>
#include <string>

namespace uasflow {

// Error carrying a stable kebab-case code, e.g. "segment-length-not-multiple-of-S".
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Raised for invalid user input; the CLI maps it to exit status 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace uasflow
