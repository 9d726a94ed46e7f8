#pragma once

#include <stdexcept>
#include <string>

namespace sysid {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    /// Short machine-readable tag written to result files.
    virtual const char* tag() const noexcept { return "Error"; }
};

#define SYSID_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                    \
    public:                                                        \
        using Error::Error;                                        \
        const char* tag() const noexcept override { return #Name; } \
    }

SYSID_DEFINE_ERROR(SingularInformation);
SYSID_DEFINE_ERROR(TruncationStarvation);
SYSID_DEFINE_ERROR(ChainStalled);
SYSID_DEFINE_ERROR(NonPositiveDefinite);
SYSID_DEFINE_ERROR(AllFitsFailed);
SYSID_DEFINE_ERROR(ZeroTrueNorm);
SYSID_DEFINE_ERROR(EmptySet);
SYSID_DEFINE_ERROR(ConfigError);
SYSID_DEFINE_ERROR(IoError);

#undef SYSID_DEFINE_ERROR

} // namespace sysid
