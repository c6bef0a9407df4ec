#include "curigs/error.hpp"

namespace curigs {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidCamera: return "InvalidCamera";
    case Errc::EmptyTeachers: return "EmptyTeachers";
    case Errc::NonMonotoneLevels: return "NonMonotoneLevels";
    case Errc::SingularCovariance: return "SingularCovariance";
    case Errc::StaleForward: return "StaleForward";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::TooSmall: return "TooSmall";
    case Errc::DegenerateDepth: return "DegenerateDepth";
    case Errc::EmptyBackground: return "EmptyBackground";
    case Errc::InactiveCurriculum: return "InactiveCurriculum";
    case Errc::MissingLevel: return "MissingLevel";
    case Errc::UnknownStudent: return "UnknownStudent";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NumericalFailure: return "NumericalFailure";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void raise(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace curigs
