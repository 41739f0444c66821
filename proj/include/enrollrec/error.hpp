#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace enrollrec {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised by the CSV readers; carries the 1-based line of the offending row.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Lookup of an id (student, course, subject, list name) that does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

}  // namespace enrollrec
