#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace imgtopic {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A required file is missing or unreadable.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Malformed input data. Carries the 1-based line (text formats) or the
// byte offset (binary formats) where parsing failed; 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line, std::size_t offset = 0)
        : Error(line > 0 ? msg + " (line " + std::to_string(line) + ")"
                         : msg + " (offset " + std::to_string(offset) + ")"),
          line_(line),
          offset_(offset) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t line_;
    std::size_t offset_;
};

// Lookup of an id or word that was never registered.
class NotFoundError : public Error {
public:
    explicit NotFoundError(const std::string& msg) : Error(msg) {}
};

// An operation produced no usable output (all words pruned, no candidates).
class EmptyResultError : public Error {
public:
    explicit EmptyResultError(const std::string& msg) : Error(msg) {}
};

// A caller violated a documented precondition.
class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

}  // namespace imgtopic
