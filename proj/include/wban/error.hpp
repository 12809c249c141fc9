#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wban {

// Base of every error thrown by the toolkit. Callers that only need a
// diagnostic catch this; tests distinguish the concrete kinds below.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input row; carries the 1-based line number of the offending row.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(reason) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

// Well-formed row that violates the node-role schema (e.g. a receiver-only
// radio in the tx column).
class SchemaError : public Error {
public:
    SchemaError(std::size_t line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(reason) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Neither direction of a node pair was measured.
class MissingLinkError : public Error {
public:
    using Error::Error;
};

// A receiver-only node was used where a transmitting node is required.
class RoleError : public Error {
public:
    using Error::Error;
};

// Metric requested on input for which it is undefined (empty series, N < 2).
class MetricError : public Error {
public:
    using Error::Error;
};

// Target probability not bracketed by an outage curve.
class NotCrossedError : public Error {
public:
    using Error::Error;
};

// Pair selection produced nothing to analyze.
class EmptySelectionError : public Error {
public:
    using Error::Error;
};

} // namespace wban
