#include "sccontrol/errors.hpp"

namespace scc {

std::string_view error_name(ErrorCode code)
{
    switch (code) {
    case ErrorCode::DiscountTooLow: return "DiscountTooLow";
    case ErrorCode::NonpositiveVolatility: return "NonpositiveVolatility";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::NegativeMertonConstant: return "NegativeMertonConstant";
    case ErrorCode::LeisureNotAboveOne: return "LeisureNotAboveOne";
    case ErrorCode::SingularTransform: return "SingularTransform";
    case ErrorCode::ZeroNoise: return "ZeroNoise";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::DegenerateRegressor: return "DegenerateRegressor";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::NoSolution: return "NoSolution";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::OutsideWorkRegion: return "OutsideWorkRegion";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::InvalidInput: return "InvalidInput";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code)
{
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace scc
