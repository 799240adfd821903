#pragma once

#include <stdexcept>
#include <string>

namespace eblab {

// Invalid arguments, inadmissible hyper-parameters, malformed configuration.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Root-finding, sampling or quadrature that cannot produce a usable value.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ParameterError(what);
}

}  // namespace eblab
