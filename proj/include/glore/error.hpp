#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace glore {

/// Coarse failure class. The CLI prints it as the first field of its
/// one-line error message, so scripts can branch on it.
enum class ErrorCategory { Usage, Config, Io, Parse, Data, Numeric };

inline std::string_view to_string(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::Usage: return "usage";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Parse: return "parse";
    case ErrorCategory::Data: return "data";
    case ErrorCategory::Numeric: return "numeric";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t offset)
        : Error(ErrorCategory::Parse, message + " at byte " + std::to_string(offset)),
          message_(message), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }
    const std::string& message() const noexcept { return message_; }

    ParseError with_context(const std::string& prefix) const {
        return ParseError(prefix + message_, offset_);
    }

private:
    std::string message_;
    std::size_t offset_;
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

} // namespace glore
