// Error types shared by the library and the command line tool.
#pragma once

#include <stdexcept>

namespace sgmm {

// Invalid arguments or configuration (bad shapes, H > M, eps <= 0, ...).
class usage_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Unreadable, truncated or malformed files.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace sgmm
