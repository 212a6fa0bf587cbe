#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace driftalloc {

enum class ErrorCode {
    Domain,                  // argument outside the operation's domain
    SurvivalUnderflow,       // survival below the 1e-300 floor
    NotAbsolutelyContinuous, // density/hazard of a point mass
    SingularAtOrigin,        // curve evaluated at its singular point
    Kink,                    // derivative requested at a non-differentiable point
    NoConvergence,           // iteration cap reached
    InfeasibleShot,          // shooting method could not bracket a solution
    Unsupported,             // operation not defined for this input shape
    Parse,                   // malformed text specification or config
    Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::Domain, what);
}

}  // namespace driftalloc
