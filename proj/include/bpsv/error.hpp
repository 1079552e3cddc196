#pragma once

#include <stdexcept>
#include <string>

namespace bpsv {

/// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
    Domain = 1,         ///< argument outside the mathematical domain (l < 2, mu <= 0, ...)
    Shape,              ///< component / grid size mismatch
    Solvability,        ///< periodic Poisson right-hand side has nonzero mean
    Gate,               ///< existence condition violated
    NotConverged,       ///< iteration cap reached
    Diverged,           ///< iterate overflowed exp()
    Underflow,          ///< decay window below floating point resolution
    WrongDomain,        ///< torus-only operation applied to a planar result (or vice versa)
    Io,
    Parse,
    InvalidArgument,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace bpsv
