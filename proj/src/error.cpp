#include "panelmetrics/error.hpp"

namespace pm {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::UnbalancedPanel: return "UnbalancedPanel";
    case ErrorCode::BoundaryMissing: return "BoundaryMissing";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::MissingCells: return "MissingCells";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroMeanColumn: return "ZeroMeanColumn";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::AllUniformColumns: return "AllUniformColumns";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroShare: return "ZeroShare";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::SingularBread: return "SingularBread";
    case ErrorCode::TooShortPanel: return "TooShortPanel";
    case ErrorCode::SingularWeighting: return "SingularWeighting";
    case ErrorCode::InsufficientPeriods: return "InsufficientPeriods";
    case ErrorCode::ExactlyIdentified: return "ExactlyIdentified";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::ZeroTotalEffect: return "ZeroTotalEffect";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::StyleMismatch: return "StyleMismatch";
    case ErrorCode::StageFailed: return "StageFailed";
  }
  return "Unknown";
}

}  // namespace pm
