#pragma once

#include <stdexcept>
#include <string>

namespace cocoa {

// Error taxonomy. The CLI maps each kind to its own exit code.

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ProviderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cocoa
