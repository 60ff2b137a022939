#pragma once

#include <stdexcept>
#include <string>

namespace coxmono {

/// Invalid input: malformed files, out-of-domain parameters, bad configs.
class DataError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (non-convergence, separation, too many
/// failed bootstrap replicates).
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace coxmono
