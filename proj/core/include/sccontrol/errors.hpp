#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scc {

enum class ErrorCode {
    DiscountTooLow,
    NonpositiveVolatility,
    InvalidParameter,
    NegativeMertonConstant,
    LeisureNotAboveOne,
    SingularTransform,
    ZeroNoise,
    DegenerateCloud,
    DegenerateRegressor,
    NoBracket,
    NoSolution,
    QuadratureFailure,
    NoConvergence,
    OutsideWorkRegion,
    DegenerateDenominator,
    InvalidInput,
};

std::string_view error_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI's error JSON) can branch on it without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace scc
