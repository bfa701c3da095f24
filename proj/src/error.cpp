#include "psr/error.hpp"

namespace psr {

std::string_view to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::usage:
      return "usage";
    case ErrorCategory::invariant:
      return "invariant";
    case ErrorCategory::io:
      return "io";
  }
  return "unknown";
}

}  // namespace psr
