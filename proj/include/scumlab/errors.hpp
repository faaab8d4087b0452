#pragma once

#include <stdexcept>
#include <string>

namespace scum {

// Base for every failure raised by the library. Each operation documents the
// subclasses it can throw; callers that only care about success can catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define SCUM_DEFINE_ERROR(Name)                                                \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {}   \
    }

SCUM_DEFINE_ERROR(InvalidArgument);
SCUM_DEFINE_ERROR(NormalizationError);
SCUM_DEFINE_ERROR(SupportCapExceeded);
SCUM_DEFINE_ERROR(ZeroLikelihood);
SCUM_DEFINE_ERROR(DivergentSeries);
SCUM_DEFINE_ERROR(OrderMismatch);
SCUM_DEFINE_ERROR(Intractable);
SCUM_DEFINE_ERROR(UncertifiedTail);
SCUM_DEFINE_ERROR(DegenerateLag);
SCUM_DEFINE_ERROR(TailUnbounded);
SCUM_DEFINE_ERROR(DeltaNonpositive);
SCUM_DEFINE_ERROR(NotApplicable);
SCUM_DEFINE_ERROR(NegativeEntry);
SCUM_DEFINE_ERROR(VarianceBlowup);
SCUM_DEFINE_ERROR(ReferenceUncertain);
SCUM_DEFINE_ERROR(ZeroKernelValue);
SCUM_DEFINE_ERROR(ConstantNotApplicable);
SCUM_DEFINE_ERROR(Undetermined);
SCUM_DEFINE_ERROR(NoStationaryMeasure);
SCUM_DEFINE_ERROR(TailExhausted);
SCUM_DEFINE_ERROR(WindowMismatch);
SCUM_DEFINE_ERROR(ConfigError);

#undef SCUM_DEFINE_ERROR

} // namespace scum
