#pragma once

#include <stdexcept>
#include <string>

namespace mtgcn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An argument lies outside the domain the operation accepts.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed dataset or checkpoint input. Carries the offending line when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A NaN/Inf or an unexpected imaginary residue appeared; `stage` names where.
class NumericError : public Error {
public:
    NumericError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

} // namespace mtgcn
