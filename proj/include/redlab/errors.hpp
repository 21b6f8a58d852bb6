#pragma once

#include <stdexcept>
#include <string>

namespace redlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define REDLAB_DEFINE_ERROR(Name)                 \
    class Name : public Error {                   \
    public:                                       \
        using Error::Error;                       \
    }

REDLAB_DEFINE_ERROR(DimensionError);
REDLAB_DEFINE_ERROR(DomainError);
REDLAB_DEFINE_ERROR(ValidationError);
REDLAB_DEFINE_ERROR(NotClosedForm);
REDLAB_DEFINE_ERROR(TruncationNotConverged);
REDLAB_DEFINE_ERROR(SingularSystem);
REDLAB_DEFINE_ERROR(DegenerateState);
REDLAB_DEFINE_ERROR(StepTooLarge);
REDLAB_DEFINE_ERROR(TooFewCycles);
REDLAB_DEFINE_ERROR(NoBracket);
REDLAB_DEFINE_ERROR(ManifestError);

#undef REDLAB_DEFINE_ERROR

/// Configuration text could not be parsed; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace redlab
