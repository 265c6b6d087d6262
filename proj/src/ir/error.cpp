#include "ctf/ir/error.hpp"

namespace ctf {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PrefixMismatch: return "PrefixMismatch";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::DuplicateValue: return "DuplicateValue";
    case ErrorCode::UnknownSupport: return "UnknownSupport";
    case ErrorCode::NotEnumerable: return "NotEnumerable";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::NonTerminating: return "NonTerminating";
    case ErrorCode::AllZeroWeights: return "AllZeroWeights";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::CoarsenFailure: return "CoarsenFailure";
    case ErrorCode::EmptyRefinement: return "EmptyRefinement";
    case ErrorCode::AllZeroScores: return "AllZeroScores";
    case ErrorCode::NegativeLevel: return "NegativeLevel";
    case ErrorCode::UnregisteredConstruct: return "UnregisteredConstruct";
    case ErrorCode::RefinementExplosion: return "RefinementExplosion";
    case ErrorCode::UnresolvedLattice: return "UnresolvedLattice";
    case ErrorCode::FullyCoarsened: return "FullyCoarsened";
    case ErrorCode::NotDivisible: return "NotDivisible";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonDyadicM: return "NonDyadicM";
    case ErrorCode::ObservationOutOfRange: return "ObservationOutOfRange";
    case ErrorCode::EmptyTraces: return "EmptyTraces";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace ctf
