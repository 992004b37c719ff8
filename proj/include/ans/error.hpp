#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ans {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand dimensions do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// An argument lies outside the operation's domain (bad label, p >= 1, M > 1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A call arrived in the wrong order, e.g. backward before forward.
class StateError : public Error {
public:
    using Error::Error;
};

/// A computation produced NaN or Inf.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A file could not be opened, written or flushed.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input text. `line` is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Invalid experiment configuration; `key` names the offending field.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// A training run aborted at a specific batch.
class TrainingError : public Error {
public:
    TrainingError(const std::string& what, std::size_t epoch, std::size_t batch)
        : Error("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ": " + what),
          epoch_(epoch),
          batch_(batch) {}

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

}  // namespace ans
