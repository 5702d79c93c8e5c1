#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tde {

enum class ErrorCode {
    NonPositiveBandwidth,
    InvalidGrid,
    InvalidSample,
    EmptySample,
    NegativeInput,
    EmptyInput,
    DegenerateSample,
    ComponentCountMismatch,
    GridTooShort,
    InvalidSpec,
    EmptyRecords,
    ParseError,
    InvalidConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries a machine-readable code so the
// CLI can map it onto an exit status and the harness onto a failure marker.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace tde
