#pragma once

#include <stdexcept>
#include <string>

namespace cavity_dw {

// Invalid arguments or parameter sets (violated preconditions).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// NaN/overflow, runaway boundary density, iteration caps.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace cavity_dw
