#ifndef PFAN_ERRORS_HPP
#define PFAN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pfan {

// Error hierarchy. The CLI maps these onto process exit codes, so every
// failure below the operator surface must land in one of these buckets.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible matrix/vector shapes.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Bad scalar argument (e.g. temperature <= 0).
class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& msg) : Error(msg) {}
};

// Manifest / config problems.  Exit code 2.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Dataset problems: missing files, degenerate specs, size violations.  Exit code 3.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Malformed binary input; carries the byte offset of the first bad byte.
class FormatError : public DataError {
public:
    FormatError(const std::string& msg, long long byte_offset)
        : DataError(msg + " at byte " + std::to_string(byte_offset)),
          offset(byte_offset) {}
    long long offset;
};

// Non-finite loss or gradient.  Exit code 4.
class TrainingDivergence : public Error {
public:
    explicit TrainingDivergence(const std::string& msg) : Error(msg) {}
};

}  // namespace pfan

#endif
