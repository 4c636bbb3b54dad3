#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mimtwin {

// Input violates a physical precondition (unstable resonator, negative power, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A numerical procedure could not produce a result (bracketing, step underflow).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Anti-damping exceeds intrinsic damping: no steady state exists.
class InstabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad data handed to an analysis routine (empty window, non-finite values, missing tone).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace mimtwin
