#include "foldsimplex/error.hpp"

namespace foldsimplex {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_dimension: return "invalid-dimension";
    case ErrorKind::out_of_region: return "out-of-region";
    case ErrorKind::fold_failure: return "fold-failure";
    case ErrorKind::singular_fold: return "singular-fold";
    case ErrorKind::not_positive_definite: return "not-positive-definite";
    case ErrorKind::degenerate_covariance: return "degenerate-covariance";
    case ErrorKind::numeric_failure: return "numeric-failure";
    case ErrorKind::non_concave_profile: return "non-concave-profile";
    case ErrorKind::parse: return "parse";
    case ErrorKind::zero_component: return "zero-component";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace foldsimplex
