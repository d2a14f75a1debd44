#ifndef FAIRKIT_ERROR_HPP
#define FAIRKIT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace fairkit {

/// Base class for all faults raised by the library. Violations that are
/// ordinary data (e.g. a failed validation report) are not exceptions.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Syntax error in a DAG file, fairness-spec file, or CSV input.
/// `line` is 1-based; 0 means "not tied to a specific line".
class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const { return line_; }

  private:
    std::size_t line_ = 0;
};

/// A conditional probability needed with positive weight is undefined in the
/// data (zero-count stratum). Raised instead of silently zeroing the term.
class PositivityError : public Error {
  public:
    explicit PositivityError(const std::string& what) : Error(what) {}
};

}  // namespace fairkit

#endif
