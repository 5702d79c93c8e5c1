#include "tde/error.hpp"

namespace tde {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NonPositiveBandwidth: return "NonPositiveBandwidth";
        case ErrorCode::InvalidGrid: return "InvalidGrid";
        case ErrorCode::InvalidSample: return "InvalidSample";
        case ErrorCode::EmptySample: return "EmptySample";
        case ErrorCode::NegativeInput: return "NegativeInput";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::DegenerateSample: return "DegenerateSample";
        case ErrorCode::ComponentCountMismatch: return "ComponentCountMismatch";
        case ErrorCode::GridTooShort: return "GridTooShort";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::EmptyRecords: return "EmptyRecords";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

}  // namespace tde
