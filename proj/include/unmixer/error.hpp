#ifndef UNMIXER_ERROR_HPP
#define UNMIXER_ERROR_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace unmixer {

/// Failure category. The CLI maps each kind onto a stable exit code.
enum class ErrorKind { config, data, numerical };

inline const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::numerical: return "numerical";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Numerical breakdown. Iterative routines attach the iteration count they reached.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what, std::optional<std::size_t> iterations = {})
        : Error(ErrorKind::numerical, what), iterations_(iterations)
    {
    }

    std::optional<std::size_t> iterations() const noexcept { return iterations_; }

private:
    std::optional<std::size_t> iterations_;
};

} // namespace unmixer

#endif // UNMIXER_ERROR_HPP
