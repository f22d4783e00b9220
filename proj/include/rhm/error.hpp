#pragma once

#include <stdexcept>
#include <string>

namespace rhm {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or size disagreement between tensors, layers or features.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
    using Error::Error;
};

// API called out of order (e.g. backward without a recorded forward).
class StateError : public Error {
public:
    using Error::Error;
};

// Malformed measurements or signals.
class DataError : public Error {
public:
    using Error::Error;
};

// Time-ordering violations in series input.
class OrderingError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace rhm
