#pragma once

#include <stdexcept>
#include <string>

namespace dirset {

// Input errors map to exit code 1, numerical failures to exit code 2.
enum class ErrorCategory { Input, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

#define DIRSET_DEFINE_ERROR(Name, Category)                                   \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what)                                \
            : Error(ErrorCategory::Category, std::string(#Name ": ") + what) {} \
    }

DIRSET_DEFINE_ERROR(InvalidArgument, Input);
DIRSET_DEFINE_ERROR(InsufficientData, Input);
DIRSET_DEFINE_ERROR(InvalidResponse, Input);
DIRSET_DEFINE_ERROR(InvalidNull, Input);
DIRSET_DEFINE_ERROR(DimensionTooLarge, Input);
DIRSET_DEFINE_ERROR(ParseError, Input);
DIRSET_DEFINE_ERROR(SchemaError, Input);

DIRSET_DEFINE_ERROR(SingularMatrix, Numerical);
DIRSET_DEFINE_ERROR(SingularCovariance, Numerical);
DIRSET_DEFINE_ERROR(DegenerateDirection, Numerical);
DIRSET_DEFINE_ERROR(UnstableLambda, Numerical);
DIRSET_DEFINE_ERROR(SeparationError, Numerical);

#undef DIRSET_DEFINE_ERROR

inline int exit_code_for(const Error& e) {
    return e.category() == ErrorCategory::Input ? 1 : 2;
}

} // namespace dirset
