#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fbhfs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain where the requested quantity exists.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Cholesky pivot `index` (1-based) was not positive.
class NotPositiveDefinite : public Error {
public:
    explicit NotPositiveDefinite(std::size_t index)
        : Error("matrix is not positive definite at pivot " + std::to_string(index)),
          index_(index) {}

    /// 1-based index of the failing pivot.
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, int iterations)
        : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
          iterations_(iterations) {}

    int iterations() const noexcept { return iterations_; }

private:
    int iterations_;
};

/// Intermediate quantity outside the supported range.
class Overflow : public Error {
public:
    using Error::Error;
};

class CannotSatisfy : public Error {
public:
    using Error::Error;
};

/// Malformed persisted document. `line` is 1-based, 0 when unknown.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class UnexpectedDegeneracy : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace fbhfs
