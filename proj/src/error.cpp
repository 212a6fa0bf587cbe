#include "driftalloc/error.hpp"

namespace driftalloc {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Domain: return "domain";
        case ErrorCode::SurvivalUnderflow: return "survival_underflow";
        case ErrorCode::NotAbsolutelyContinuous: return "not_absolutely_continuous";
        case ErrorCode::SingularAtOrigin: return "singular_at_origin";
        case ErrorCode::Kink: return "kink";
        case ErrorCode::NoConvergence: return "no_convergence";
        case ErrorCode::InfeasibleShot: return "infeasible_shot";
        case ErrorCode::Unsupported: return "unsupported";
        case ErrorCode::Parse: return "parse";
        case ErrorCode::Io: return "io";
    }
    return "unknown";
}

}  // namespace driftalloc
