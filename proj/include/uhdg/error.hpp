#pragma once

#include <stdexcept>
#include <string>

namespace uhdg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define UHDG_DEFINE_ERROR(Name)                                                \
    class Name : public Error {                                                \
    public:                                                                    \
        using Error::Error;                                                    \
    }

// geometry
UHDG_DEFINE_ERROR(NonConvergence);
UHDG_DEFINE_ERROR(NoIntersection);
UHDG_DEFINE_ERROR(InvalidBoundary);

// expressions
UHDG_DEFINE_ERROR(ParseError);
UHDG_DEFINE_ERROR(NonDifferentiable);

// mesh
UHDG_DEFINE_ERROR(QualityFailure);
UHDG_DEFINE_ERROR(SingularGram);
UHDG_DEFINE_ERROR(MeshFormatError);

// basis
UHDG_DEFINE_ERROR(UnsupportedOrder);

// hdg core
UHDG_DEFINE_ERROR(SingularLocalSolve);
UHDG_DEFINE_ERROR(PathDegenerate);
UHDG_DEFINE_ERROR(SolverFailure);

// projection
UHDG_DEFINE_ERROR(SingularProjection);

// verification
UHDG_DEFINE_ERROR(ZeroError);

// cli
UHDG_DEFINE_ERROR(ConfigError);

#undef UHDG_DEFINE_ERROR

} // namespace uhdg
