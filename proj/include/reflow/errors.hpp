#pragma once

#include <stdexcept>
#include <string>

namespace reflow {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (condition, expression, project file, ...).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Reference to an undeclared variable, action, or definition.
class NameError : public Error {
public:
    using Error::Error;
};

/// A configured resource bound (state count, history count, unfold depth)
/// was exceeded. Maps to exit code 3 in the CLI.
class BoundError : public Error {
public:
    using Error::Error;
};

/// A structural invariant of a value was violated.
class InvariantError : public Error {
public:
    using Error::Error;
};

} // namespace reflow
