#pragma once

#include <stdexcept>
#include <string>

namespace seqreg {

/// Invalid argument or precondition violation supplied by the caller.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed file contents (MetaImage header, CSV row, JSON config).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite objective or a solver that cannot proceed.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace seqreg
