#pragma once

#include <stdexcept>
#include <string>

namespace mislab {

enum class ErrorKind {
  InvalidArgument,
  DegenerateMap,
  NonFinite,
  RootFindingDivergence,
  AmbiguousMatch,
  ShadowingFailure,
  IdenticallyZero,
  NonIntegerOrder,
  NeverSeparates,
  NoAdmissibleSamples,
  FormatError,
};

const char* to_string(ErrorKind kind) noexcept;

// All library failures are reported through this type. `index` carries the
// orbit step or sample number where the failure happened, or -1.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, long index = -1);

  ErrorKind kind() const noexcept { return kind_; }
  long index() const noexcept { return index_; }
  const std::string& message() const noexcept { return message_; }

  // Same error, re-tagged with the step at which it surfaced.
  Error at_index(long index) const;

 private:
  ErrorKind kind_;
  long index_;
  std::string message_;
};

}  // namespace mislab
