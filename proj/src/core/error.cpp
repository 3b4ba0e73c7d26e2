#include "fgb/error.hpp"

namespace fgb {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Io: return "IoError";
        case ErrorCode::ManifestError: return "ManifestError";
        case ErrorCode::NoCircleFound: return "NoCircleFound";
        case ErrorCode::DegenerateCrop: return "DegenerateCrop";
        case ErrorCode::InsufficientMinorityClass: return "InsufficientMinorityClass";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::NumericalError: return "NumericalError";
        case ErrorCode::UsageError: return "UsageError";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::InsufficientSamples: return "InsufficientSamples";
        case ErrorCode::ModelLoadError: return "ModelLoadError";
        case ErrorCode::DegenerateClassBalance: return "DegenerateClassBalance";
        case ErrorCode::InsufficientPool: return "InsufficientPool";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::SequenceError: return "SequenceError";
        case ErrorCode::DuplicateResponse: return "DuplicateResponse";
        case ErrorCode::NotComplete: return "NotComplete";
    }
    return "Unknown";
}

}  // namespace fgb
