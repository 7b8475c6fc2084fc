#pragma once

#include <stdexcept>
#include <string>

namespace newton_dyn {

// Base of every error raised by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define NEWTON_DYN_ERROR(Name)                 \
    class Name : public Error {                \
    public:                                    \
        using Error::Error;                    \
    }

// algebra
NEWTON_DYN_ERROR(DegreeError);
NEWTON_DYN_ERROR(NonConvergence);
NEWTON_DYN_ERROR(ZeroRoot);
NEWTON_DYN_ERROR(MultipleRootError);

// newton_map
NEWTON_DYN_ERROR(IndeterminateError);
NEWTON_DYN_ERROR(PoleError);
NEWTON_DYN_ERROR(CountMismatch);

// orbit_classifier
NEWTON_DYN_ERROR(NotACycle);

// real_kneading
NEWTON_DYN_ERROR(NonRealMap);
NEWTON_DYN_ERROR(LengthMismatch);

// newton_graph
NEWTON_DYN_ERROR(ChartFailure);
NEWTON_DYN_ERROR(RayTraceFailure);
NEWTON_DYN_ERROR(LandingAmbiguity);
NEWTON_DYN_ERROR(LiftFailure);
NEWTON_DYN_ERROR(EmbeddingInconsistent);

// hyperbolicity_search
NEWTON_DYN_ERROR(DiscriminantZero);
NEWTON_DYN_ERROR(ContinuationLost);

// io
NEWTON_DYN_ERROR(IoError);
NEWTON_DYN_ERROR(InputError);

#undef NEWTON_DYN_ERROR

}  // namespace newton_dyn
