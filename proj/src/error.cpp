#include "parcmi/error.hpp"

namespace parcmi {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::DeepTail: return "deep-tail censoring";
    case ErrorKind::NonexistentMean: return "nonexistent mean";
    case ErrorKind::EmptyIntervalMass: return "empty interval mass";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Data: return "data";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

}  // namespace parcmi
