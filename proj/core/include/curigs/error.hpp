#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace curigs {

enum class Errc {
  InvalidArgument,
  InvalidCamera,
  EmptyTeachers,
  NonMonotoneLevels,
  SingularCovariance,
  StaleForward,
  ShapeMismatch,
  TooSmall,
  DegenerateDepth,
  EmptyBackground,
  InactiveCurriculum,
  MissingLevel,
  UnknownStudent,
  InvalidConfig,
  NumericalFailure,
  Io,
};

std::string_view to_string(Errc code) noexcept;

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void raise(Errc code, const std::string& message);

}  // namespace curigs
