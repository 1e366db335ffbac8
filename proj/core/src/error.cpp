#include "tipcast/error.hpp"

namespace tipcast {

const char* to_string(LimitErrorKind kind) noexcept {
  switch (kind) {
    case LimitErrorKind::NoBracket: return "NoBracket";
    case LimitErrorKind::SeedEscaped: return "SeedEscaped";
    case LimitErrorKind::NoConvergence: return "NoConvergence";
    case LimitErrorKind::SeparationFailure: return "SeparationFailure";
    case LimitErrorKind::WrongStabilitySign: return "WrongStabilitySign";
    case LimitErrorKind::NonHyperbolic: return "NonHyperbolic";
    case LimitErrorKind::ConcavityViolation: return "ConcavityViolation";
  }
  return "LimitError";
}

}  // namespace tipcast
