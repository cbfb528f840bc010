#pragma once

#include <stdexcept>
#include <string>

namespace m2 {

// Invalid arguments, shape mismatches, malformed files. CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or inconsistent configuration (unknown keys, empty codebook, ...). CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A required earlier lifecycle stage has not been run. CLI exit code 3.
class PrerequisiteError : public std::runtime_error {
public:
    explicit PrerequisiteError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace m2

#define M2_CHECK(cond, msg)                         \
    do {                                            \
        if (!(cond)) {                              \
            throw ::m2::ValidationError(msg);       \
        }                                           \
    } while (0)

#define M2_CHECK_CFG(cond, msg)                     \
    do {                                            \
        if (!(cond)) {                              \
            throw ::m2::ConfigError(msg);           \
        }                                           \
    } while (0)
