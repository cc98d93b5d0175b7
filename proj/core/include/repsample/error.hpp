#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace repsample {

enum class ErrorCode {
    EmptyInput,
    MalformedHeader,
    MalformedRow,
    DuplicateId,
    DuplicateMeasureName,
    NonNumericCell,
    NonFiniteCell,
    InvalidThreshold,
    EmptySet,
    KTooLarge,
    DimensionMismatch,
    InfeasibleSample,
    QuotaExceedsCluster,
    InvalidArguments,
    SizeTooLarge,
    UnknownId,
    InvalidModel,
    InvalidPopulationSpec,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// All library failures surface as this exception; `code()` identifies the
/// contract that was violated.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace repsample
