#pragma once

#include <stdexcept>
#include <string>

namespace cyldepth {

/// Base of every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define CYLDEPTH_DEFINE_ERROR(Name, tag)                                  \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& message) : Error(tag, message) {}    \
  };

CYLDEPTH_DEFINE_ERROR(DimensionError, "dimension")
CYLDEPTH_DEFINE_ERROR(ParameterError, "parameter")
CYLDEPTH_DEFINE_ERROR(OnAxisError, "on_axis")
CYLDEPTH_DEFINE_ERROR(NoOverlapError, "no_overlap")
CYLDEPTH_DEFINE_ERROR(EmptyEvaluationError, "empty_evaluation")
CYLDEPTH_DEFINE_ERROR(ConsistencyError, "consistency")
CYLDEPTH_DEFINE_ERROR(SchemaError, "schema")
CYLDEPTH_DEFINE_ERROR(FormatError, "format")
CYLDEPTH_DEFINE_ERROR(IoError, "io")

#undef CYLDEPTH_DEFINE_ERROR

}  // namespace cyldepth
