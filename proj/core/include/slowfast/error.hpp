#pragma once

#include <stdexcept>
#include <string>

namespace slowfast {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used in CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SLOWFAST_DEFINE_ERROR(Name, tag)                                 \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& message) : Error(tag, message) {}   \
  }

SLOWFAST_DEFINE_ERROR(RegistryError, "unknown-name");
SLOWFAST_DEFINE_ERROR(DomainError, "domain");
SLOWFAST_DEFINE_ERROR(ConfigError, "config");
SLOWFAST_DEFINE_ERROR(BlowUpError, "blow-up");
SLOWFAST_DEFINE_ERROR(DegeneracyError, "degeneracy");
SLOWFAST_DEFINE_ERROR(NotPositiveRecurrentError, "not-positive-recurrent");
SLOWFAST_DEFINE_ERROR(InfiniteMomentError, "infinite-moment");
SLOWFAST_DEFINE_ERROR(ResolutionError, "resolution");
SLOWFAST_DEFINE_ERROR(ConservationError, "conservation");
SLOWFAST_DEFINE_ERROR(DimensionError, "dimension");

#undef SLOWFAST_DEFINE_ERROR

}  // namespace slowfast
