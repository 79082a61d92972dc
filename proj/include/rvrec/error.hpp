#pragma once

#include <stdexcept>
#include <string>

namespace rvrec {

/// Base of every error raised by the library. `name()` is the stable error
/// kind reported by the CLI and in HTTP error bodies.
class Error : public std::runtime_error {
public:
    Error(const char* name, const std::string& message)
        : std::runtime_error(message), name_(name) {}

    const char* name() const noexcept { return name_; }

private:
    const char* name_;
};

#define RVREC_DEFINE_ERROR(Type)                                             \
    class Type : public Error {                                              \
    public:                                                                  \
        explicit Type(const std::string& message) : Error(#Type, message) {} \
    }

RVREC_DEFINE_ERROR(SyntaxError);
RVREC_DEFINE_ERROR(SchemaError);
RVREC_DEFINE_ERROR(EmptyDataError);
RVREC_DEFINE_ERROR(ScaleError);
RVREC_DEFINE_ERROR(UnsupportedSpecError);
RVREC_DEFINE_ERROR(UnknownSchemeError);
RVREC_DEFINE_ERROR(UnknownShapeError);
RVREC_DEFINE_ERROR(DegenerateViewError);
RVREC_DEFINE_ERROR(AmbiguousMatchError);
RVREC_DEFINE_ERROR(NoOverlapError);
RVREC_DEFINE_ERROR(EmptySpaceError);
RVREC_DEFINE_ERROR(IncompatibleFeaturesError);
RVREC_DEFINE_ERROR(DegenerateDataError);
RVREC_DEFINE_ERROR(MissingPairError);
RVREC_DEFINE_ERROR(ConfigError);
RVREC_DEFINE_ERROR(ModelMismatchError);

#undef RVREC_DEFINE_ERROR

}  // namespace rvrec
