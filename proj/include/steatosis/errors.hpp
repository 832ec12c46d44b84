#pragma once

#include <stdexcept>
#include <string>

namespace steatosis {

// Each category maps onto one CLI exit status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Model container could not be decoded or has an unsupported version.
class ContainerError : public IoError {
public:
    using IoError::IoError;
};

}  // namespace steatosis
