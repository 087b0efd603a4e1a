#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace vix {

// Exit-code classes surfaced by the CLI: 0 success, 2 input error,
// 3 backend error, 4 corrupt bundle.
enum class ErrorClass { Input = 2, Backend = 3, Bundle = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), class_(cls), kind_(std::move(kind)) {}

    ErrorClass error_class() const noexcept { return class_; }
    const std::string& kind() const noexcept { return kind_; }

private:
    ErrorClass class_;
    std::string kind_;
};

struct MalformedTimecode : Error {
    explicit MalformedTimecode(const std::string& m) : Error(ErrorClass::Input, "MalformedTimecode", m) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& m) : Error(ErrorClass::Input, "ParseError", m) {}
};

struct InputError : Error {
    explicit InputError(const std::string& m) : Error(ErrorClass::Input, "InputError", m) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& m) : Error(ErrorClass::Input, "DimensionMismatch", m) {}
};

struct EmptyPayload : Error {
    explicit EmptyPayload(const std::string& m) : Error(ErrorClass::Input, "EmptyPayload", m) {}
};

struct FrameBudgetExceeded : Error {
    explicit FrameBudgetExceeded(const std::string& m) : Error(ErrorClass::Input, "FrameBudgetExceeded", m) {}
};

struct MissingFrames : Error {
    explicit MissingFrames(const std::string& m) : Error(ErrorClass::Input, "MissingFrames", m) {}
};

struct BackendUnavailable : Error {
    explicit BackendUnavailable(const std::string& m) : Error(ErrorClass::Backend, "BackendUnavailable", m) {}
};

struct BackendRefusal : Error {
    explicit BackendRefusal(const std::string& m) : Error(ErrorClass::Backend, "BackendRefusal", m) {}
};

struct CorruptBundle : Error {
    explicit CorruptBundle(const std::string& m) : Error(ErrorClass::Bundle, "CorruptBundle", m) {}
};

struct VersionMismatch : Error {
    explicit VersionMismatch(const std::string& m) : Error(ErrorClass::Bundle, "VersionMismatch", m) {}
};

} // namespace vix
