#pragma once

#include <stdexcept>
#include <string>

namespace pendsearch {

/// Broad failure classes. The CLI maps these onto exit codes.
enum class ErrorKind {
    validation,   // malformed input or violated precondition
    physics,      // the requested physical configuration cannot be built or solved
    inconclusive, // the observation did not resolve a beat
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define PENDSEARCH_DEFINE_ERROR(Name, Kind)                                         \
    class Name : public Error {                                                    \
    public:                                                                        \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}   \
    };

PENDSEARCH_DEFINE_ERROR(ValidationError, validation)
PENDSEARCH_DEFINE_ERROR(ParseError, validation)
PENDSEARCH_DEFINE_ERROR(DegenerateFit, validation)
PENDSEARCH_DEFINE_ERROR(SameIndex, validation)
PENDSEARCH_DEFINE_ERROR(UnstableTimestep, validation)
PENDSEARCH_DEFINE_ERROR(DegenerateDeviation, physics)
PENDSEARCH_DEFINE_ERROR(InfeasibleDesign, physics)
PENDSEARCH_DEFINE_ERROR(OffResonance, physics)
PENDSEARCH_DEFINE_ERROR(EigenFailure, physics)
PENDSEARCH_DEFINE_ERROR(Inconsistent, physics)
PENDSEARCH_DEFINE_ERROR(NoBeatDetected, inconclusive)
PENDSEARCH_DEFINE_ERROR(InsufficientSpan, inconclusive)

#undef PENDSEARCH_DEFINE_ERROR

} // namespace pendsearch
