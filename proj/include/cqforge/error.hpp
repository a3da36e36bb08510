#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cqforge {

/// Base class for all cqforge errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input: JSON syntax errors, missing keys, wrong value types.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Structurally valid input that violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Scheme name that does not resolve in the active template set.
class UnknownSchemeError : public Error {
public:
    UnknownSchemeError(const std::string& what, std::string scheme_name,
                       std::vector<std::string> suggestions)
        : Error(what),
          scheme_name(std::move(scheme_name)),
          suggestions(std::move(suggestions)) {}

    std::string scheme_name;
    std::vector<std::string> suggestions;  // nearest canonical names, best first
};

/// Transport-level failure talking to a backend, raised after retries.
class TransportError : public Error {
public:
    using Error::Error;
};

/// The backend answered, but with an error payload or malformed body.
class BackendError : public Error {
public:
    using Error::Error;
};

}  // namespace cqforge
