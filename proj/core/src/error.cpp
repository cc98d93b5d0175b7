#include "repsample/error.hpp"

namespace repsample {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::DuplicateMeasureName: return "DuplicateMeasureName";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::NonFiniteCell: return "NonFiniteCell";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InfeasibleSample: return "InfeasibleSample";
    case ErrorCode::QuotaExceedsCluster: return "QuotaExceedsCluster";
    case ErrorCode::InvalidArguments: return "InvalidArguments";
    case ErrorCode::SizeTooLarge: return "SizeTooLarge";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::InvalidPopulationSpec: return "InvalidPopulationSpec";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
{
}

} // namespace repsample
