#pragma once

#include <stdexcept>
#include <string>

namespace foldsimplex {

/// Failure classes. The CLI maps each class to its own exit code.
enum class ErrorKind {
    invalid_argument,
    invalid_dimension,
    out_of_region,
    fold_failure,
    singular_fold,
    not_positive_definite,
    degenerate_covariance,
    numeric_failure,
    non_concave_profile,
    parse,
    zero_component,
    io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

} // namespace foldsimplex
