#pragma once

#include <stdexcept>
#include <string>

namespace gode {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied arguments that violate an operation's preconditions.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed PLY input. `property()` names the offending property when known.
class PlyParseError : public Error {
public:
    PlyParseError(const std::string& message, std::string property = {})
        : Error(property.empty() ? message : message + ": " + property),
          property_(std::move(property)) {}

    const std::string& property() const noexcept { return property_; }

private:
    std::string property_;
};

/// Malformed or unsupported `.gode` stream.
class CodecError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace gode
