#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gpsr {

// Base for every error raised by the library. The CLI maps GuardViolation
// (and TooLarge) to exit code 3 and everything else to exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An unprotected operator received an input outside its domain.
struct DomainError : Error {
    using Error::Error;
};

// Malformed prefix expression. position() is a byte offset into the input.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class UnknownSymbol : public Error {
public:
    explicit UnknownSymbol(std::string symbol)
        : Error("unknown symbol '" + symbol + "'"), symbol_(std::move(symbol)) {}

    const std::string& symbol() const noexcept { return symbol_; }

private:
    std::string symbol_;
};

struct InvalidBase : Error {
    using Error::Error;
};

struct GuardViolation : Error {
    using Error::Error;
};

struct TooLarge : GuardViolation {
    using GuardViolation::GuardViolation;
};

struct InvalidConfidence : Error {
    using Error::Error;
};

struct UnknownTarget : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct SchemaError : Error {
    using Error::Error;
};

// Malformed numeric cell in a CSV body; row and column are 1-based,
// with row 1 being the header.
class CsvParseError : public Error {
public:
    CsvParseError(const std::string& what, std::size_t row, std::size_t column)
        : Error(what + " (row " + std::to_string(row) + ", column " + std::to_string(column) + ")"),
          row_(row),
          column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error("config key '" + key + "': " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

struct MissingArtifact : Error {
    using Error::Error;
};

}  // namespace gpsr
