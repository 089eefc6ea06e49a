#ifndef MMCOOL_ERROR_HPP
#define MMCOOL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mmcool {

// Process exit codes used by the command-line front end.
enum class ExitCode : int {
    ok = 0,
    usage = 1,
    config = 2,
    numerical_abort = 3,
    insufficient_data = 4,
};

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, ExitCode code = ExitCode::usage)
        : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(what, ExitCode::config) {}
};

// Malformed or inconsistent configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what, ExitCode::config) {}
};

// Position where the friction coefficient is not positive.
class NoCoolingError : public DomainError {
public:
    explicit NoCoolingError(const std::string& what) : DomainError(what) {}
};

// Non-finite state encountered during integration.
class NumericalAbort : public Error {
public:
    NumericalAbort(const std::string& what, long long step, double state_norm)
        : Error(what, ExitCode::numerical_abort), step_(step), state_norm_(state_norm) {}
    long long step() const noexcept { return step_; }
    double state_norm() const noexcept { return state_norm_; }

private:
    long long step_;
    double state_norm_;
};

class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& what)
        : Error(what, ExitCode::insufficient_data) {}
};

} // namespace mmcool

#endif // MMCOOL_ERROR_HPP
