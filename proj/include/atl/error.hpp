#pragma once

#include <stdexcept>
#include <string>

namespace atl {

/// Raised when a caller passes arguments outside an operation's domain.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine hits a state its preconditions rule out.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace atl
