#ifndef FLEXIFILM_ERROR_HPP
#define FLEXIFILM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace flexifilm {

// Extents disagree or an extent is zero.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// NaN/Inf input, or a degenerate statistic such as a zero std.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parameter outside its documented range.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Caller broke an operation's precondition (non-scalar loss, index out of range, ...).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace flexifilm

#endif
