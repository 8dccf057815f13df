#pragma once

#include <stdexcept>
#include <string>

namespace retina {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

class UnsupportedFormatError : public Error {
public:
    using Error::Error;
};

class InvalidDimensionError : public Error {
public:
    using Error::Error;
};

class InvalidChannelError : public Error {
public:
    using Error::Error;
};

class InvalidParameterError : public Error {
public:
    using Error::Error;
};

class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// Raised by the divisive bipolar-cell variant when alpha + h hits zero.
class DivisionByZeroError : public Error {
public:
    DivisionByZeroError(std::size_t row, std::size_t col)
        : Error("division by zero at pixel (row=" + std::to_string(row) +
                ", col=" + std::to_string(col) + ")"),
          row_(row), col_(col) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

class CheckpointFormatError : public Error {
public:
    using Error::Error;
};

class LayoutError : public Error {
public:
    using Error::Error;
};

class PairingError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values encountered during training or optimization.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace retina
