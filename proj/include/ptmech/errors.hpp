// errors.hpp - exception hierarchy shared by every ptmech module.
//
// Each error carries a category so the CLI can map failures onto exit codes
// (2 = configuration, 3 = numerics, 4 = physics-regime refusal).

#pragma once

#include <stdexcept>
#include <string>

namespace ptmech {

enum class ErrorCategory { Config, Numerics, Physics };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string kind, const std::string& what)
        : std::runtime_error(what), category_(category), kind_(std::move(kind)) {}

    ErrorCategory category() const noexcept { return category_; }
    const std::string& kind() const noexcept { return kind_; }

private:
    ErrorCategory category_;
    std::string kind_;
};

#define PTMECH_DEFINE_ERROR(Name, Category)                                   \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what)                                \
            : Error(ErrorCategory::Category, #Name, what) {}                  \
    };

// configuration
PTMECH_DEFINE_ERROR(ParseError, Config)
PTMECH_DEFINE_ERROR(ValidationError, Config)

// numerics
PTMECH_DEFINE_ERROR(NoConvergence, Numerics)
PTMECH_DEFINE_ERROR(Diverged, Numerics)
PTMECH_DEFINE_ERROR(StepTooLarge, Numerics)
PTMECH_DEFINE_ERROR(QuadratureFailure, Numerics)
PTMECH_DEFINE_ERROR(InsufficientPeaks, Numerics)
PTMECH_DEFINE_ERROR(Inconsistent, Numerics)

// physics regime
PTMECH_DEFINE_ERROR(DomainError, Physics)
PTMECH_DEFINE_ERROR(RegimeError, Physics)
PTMECH_DEFINE_ERROR(WrongPhase, Physics)
PTMECH_DEFINE_ERROR(DegenerateSpectrum, Physics)

#undef PTMECH_DEFINE_ERROR

inline int exit_code(ErrorCategory c) noexcept {
    switch (c) {
        case ErrorCategory::Config: return 2;
        case ErrorCategory::Numerics: return 3;
        case ErrorCategory::Physics: return 4;
    }
    return 1;
}

}  // namespace ptmech
