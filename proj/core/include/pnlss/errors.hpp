#pragma once

#include <stdexcept>
#include <string>

namespace pnlss {

/// Invalid user-supplied configuration or violated precondition.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Divergence, singular evaluation or any other numerical breakdown.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File-system or parse failure.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pnlss
