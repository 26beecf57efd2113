#pragma once

#include <stdexcept>
#include <string>

namespace impflow {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of an operation (negative time,
/// mismatched spaces, a point outside X_xi ∪ D, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// The crossing function touched zero without changing sign at a point of
/// the target set. Transversality excludes this, so the system is malformed.
class GrazingError : public Error {
public:
    GrazingError(const std::string& what, double time)
        : Error(what), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Internal bookkeeping disagrees with the declared constants of a system
/// (too many impulses for the horizon, impulse gaps below eta, ...).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// A configuration file or command line could not be turned into an experiment.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace impflow
