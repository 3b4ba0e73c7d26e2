#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fgb {

enum class ErrorCode {
    Io,
    ManifestError,
    NoCircleFound,
    DegenerateCrop,
    InsufficientMinorityClass,
    DomainError,
    NumericalError,
    UsageError,
    ConfigError,
    InsufficientSamples,
    ModelLoadError,
    DegenerateClassBalance,
    InsufficientPool,
    NotFound,
    SequenceError,
    DuplicateResponse,
    NotComplete,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure the library reports is an fgb::Error carrying one of the
// codes above; callers branch on code() rather than on exception type.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace fgb
