#pragma once

#include <stdexcept>
#include <string>

namespace watt {

// Base of every error raised by the library. Each subclass maps onto one
// exit code / HTTP status in the front ends.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed input record (bad reading, bad request body).
class ValidationError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

// Timestamp not strictly after the previous one for the same stream.
class OrderingError : public Error {
public:
    using Error::Error;
};

class ClockRegressionError : public Error {
public:
    using Error::Error;
};

// State conflict, e.g. paying an invoice twice.
class ConflictError : public Error {
public:
    using Error::Error;
};

class InsufficientBalanceError : public Error {
public:
    using Error::Error;
};

// Operation called before its precondition holds (e.g. billing an open period).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Invalid configuration or scenario file.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Persisted data could not be parsed.
class CorruptDataError : public Error {
public:
    using Error::Error;
};

} // namespace watt
