#pragma once

#include <stdexcept>
#include <string>

namespace gfd {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

// -1 in the spectrum, no Cayley generating function
struct CayleySingular : Error {
    using Error::Error;
};

struct NotSymplectic : Error {
    using Error::Error;
};

// step too large for the implicit midpoint inversion
struct NewtonDivergence : Error {
    using Error::Error;
};

struct CBlockSingular : Error {
    using Error::Error;
};

struct SubdivisionFailure : Error {
    using Error::Error;
};

struct ContinuationFailure : Error {
    using Error::Error;
};

struct ParityError : Error {
    using Error::Error;
};

// an identity that must hold did not
struct VerificationFailure : Error {
    using Error::Error;
};

struct ResourceCap : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

} // namespace gfd
