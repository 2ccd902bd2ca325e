#pragma once

#include <stdexcept>
#include <string>

namespace beatosc {

// Every failure raised by the library derives from Error. The category lets
// the CLI map failures onto exit statuses without string matching.
enum class ErrorCategory {
    validation,  // bad input: parameters, configuration, grid
    numerical,   // singular systems, non-convergence, unstable loops
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

#define BEATOSC_DEFINE_ERROR(Name, Category)                                  \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what)                                \
            : Error(ErrorCategory::Category, #Name ": " + what) {}            \
    }

BEATOSC_DEFINE_ERROR(ValidationError, validation);
BEATOSC_DEFINE_ERROR(RationalizationFailure, validation);
BEATOSC_DEFINE_ERROR(IndexOutOfGrid, validation);
BEATOSC_DEFINE_ERROR(WindowMismatch, validation);
BEATOSC_DEFINE_ERROR(NonRealResult, numerical);
BEATOSC_DEFINE_ERROR(SingularSystem, numerical);
BEATOSC_DEFINE_ERROR(NoConvergence, numerical);
BEATOSC_DEFINE_ERROR(UnstableLoop, numerical);
BEATOSC_DEFINE_ERROR(NoCrossover, numerical);
BEATOSC_DEFINE_ERROR(NoResonance, numerical);

#undef BEATOSC_DEFINE_ERROR

}  // namespace beatosc
