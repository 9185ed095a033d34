#pragma once

#include <stdexcept>
#include <string>

namespace crystal {

enum class ErrorCode {
    InvalidArgument = 1,
    UnknownBuiltin,
    ParseError,
    SymmetryViolation,
    SummabilityViolation,
    NotAdmissible,
    ResolutionExceeded,
    SpectrumProximity,
    IntegrationFailure,
    NumericalError,
    DivergentGradientEnergy,
    PreconditionFailed,
    IoError,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace crystal
