#include "mislab/error.hpp"

namespace mislab {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DegenerateMap: return "DegenerateMap";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::RootFindingDivergence: return "RootFindingDivergence";
    case ErrorKind::AmbiguousMatch: return "AmbiguousMatch";
    case ErrorKind::ShadowingFailure: return "ShadowingFailure";
    case ErrorKind::IdenticallyZero: return "IdenticallyZero";
    case ErrorKind::NonIntegerOrder: return "NonIntegerOrder";
    case ErrorKind::NeverSeparates: return "NeverSeparates";
    case ErrorKind::NoAdmissibleSamples: return "NoAdmissibleSamples";
    case ErrorKind::FormatError: return "FormatError";
  }
  return "Unknown";
}

namespace {
std::string decorate(ErrorKind kind, const std::string& message, long index) {
  std::string out = std::string(to_string(kind)) + ": " + message;
  if (index >= 0) out += " (at index " + std::to_string(index) + ")";
  return out;
}
}  // namespace

Error::Error(ErrorKind kind, const std::string& message, long index)
    : std::runtime_error(decorate(kind, message, index)),
      kind_(kind),
      index_(index),
      message_(message) {}

Error Error::at_index(long index) const {
  return Error(kind_, message_, index);
}

}  // namespace mislab
