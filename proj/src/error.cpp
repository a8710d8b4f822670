#include "dyadnet/error.hpp"

namespace dyadnet {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IdentityPair: return "IdentityPair";
    case ErrorCode::NodeOutOfRange: return "NodeOutOfRange";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::AllCellsEmpty: return "AllCellsEmpty";
    case ErrorCode::AmbiguousSpecialRegressor: return "AmbiguousSpecialRegressor";
    case ErrorCode::NonPositiveDensity: return "NonPositiveDensity";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::IsolatedNodes: return "IsolatedNodes";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::UnknownLevelValue: return "UnknownLevelValue";
    case ErrorCode::LevelCollapse: return "LevelCollapse";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicatePair: return "DuplicatePair";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::MissingPair: return "MissingPair";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
  }
  return "Unknown";
}

ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::IdentityPair:
    case ErrorCode::NodeOutOfRange:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::GroupTooSmall:
    case ErrorCode::EmptyReference:
    case ErrorCode::UnknownColumn:
      return ErrorCategory::Usage;
    case ErrorCode::ParseError:
    case ErrorCode::DuplicatePair:
    case ErrorCode::SelfLoop:
    case ErrorCode::MissingPair:
    case ErrorCode::UnknownLevelValue:
    case ErrorCode::LevelCollapse:
    case ErrorCode::IsolatedNodes:
    case ErrorCode::AmbiguousSpecialRegressor:
      return ErrorCategory::Data;
    case ErrorCode::EmptyCell:
    case ErrorCode::AllCellsEmpty:
    case ErrorCode::NonPositiveDensity:
    case ErrorCode::SingularDesign:
      return ErrorCategory::Numerical;
  }
  return ErrorCategory::Usage;
}

}  // namespace dyadnet
