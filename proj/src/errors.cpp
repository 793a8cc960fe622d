#include "flipline/errors.hpp"
#include "flipline/params.hpp"

namespace flipline {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::SingleWellRegime: return "SingleWellRegime";
        case ErrorKind::OutsideWellRange: return "OutsideWellRange";
        case ErrorKind::CriticalPoint: return "CriticalPoint";
        case ErrorKind::PoleProximity: return "PoleProximity";
        case ErrorKind::NoBoundStates: return "NoBoundStates";
        case ErrorKind::LocalizationPoint: return "LocalizationPoint";
        case ErrorKind::NullSpaceDegenerate: return "NullSpaceDegenerate";
        case ErrorKind::TruncationInsufficient: return "TruncationInsufficient";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::QuadratureFailure: return "QuadratureFailure";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::ValidationError: return "ValidationError";
    }
    return "Unknown";
}

void validate(const ModelParams& p) {
    if (!(p.lambda > 0.0)) throw Error(ErrorKind::DomainError, "lambda must be positive");
    if (!(p.kappa > 0.0)) throw Error(ErrorKind::DomainError, "kappa must be positive");
}

WellRole role(WellId well, double alpha_d) {
    if (alpha_d == 0.0) return WellRole::Symmetric;
    int deep = alpha_d > 0.0 ? 1 : -1;
    return well.sigma == deep ? WellRole::Deep : WellRole::Shallow;
}

WellId deep_well(double alpha_d) { return alpha_d < 0.0 ? WellId{-1} : WellId{1}; }
WellId shallow_well(double alpha_d) { return alpha_d < 0.0 ? WellId{1} : WellId{-1}; }

}  // namespace flipline
