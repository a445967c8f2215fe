#pragma once

#include <stdexcept>
#include <string>

namespace augbound {

// Invalid or inconsistent configuration; the CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Combinatorial blowup guard tripped; the CLI maps this to exit code 3.
class GuardError : public std::runtime_error {
public:
    explicit GuardError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace augbound
