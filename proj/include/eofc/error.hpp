#pragma once

#include <stdexcept>
#include <string>

namespace eofc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad index, bad size, bad parameter).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The requested pilot rate cannot be realized by the chosen pilot scheme.
class RateInfeasible : public Error {
public:
    using Error::Error;
};

/// The pilot layout does not observe the states a tracker needs.
class Unobservable : public Error {
public:
    using Error::Error;
};

/// A configuration file failed validation. `key()` names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

}  // namespace detail
}  // namespace eofc
