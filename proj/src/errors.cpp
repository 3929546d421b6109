#include "oasis/errors.hpp"

namespace oasis {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NegativeEigenvalue: return "NegativeEigenvalue";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InsufficientSample: return "InsufficientSample";
    case ErrorKind::CollinearRegressors: return "CollinearRegressors";
    case ErrorKind::NonpositiveWeight: return "NonpositiveWeight";
    case ErrorKind::InvalidPermutation: return "InvalidPermutation";
    case ErrorKind::NotInFeasibleSet: return "NotInFeasibleSet";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::NotOrthonormal: return "NotOrthonormal";
    case ErrorKind::RhoOutOfRange: return "RhoOutOfRange";
    case ErrorKind::SingularSubset: return "SingularSubset";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::UnknownVariable: return "UnknownVariable";
    case ErrorKind::NonPositiveValueUnderLog: return "NonPositiveValueUnderLog";
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::MissingValue: return "MissingValue";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace oasis
