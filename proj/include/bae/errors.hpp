#pragma once

#include <stdexcept>
#include <string>

namespace bae {

/// Invalid hyperparameters, shapes that do not chain, bad CLI values.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Data that violates an operation's precondition (empty, unnormalized, unlabeled).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A metric is undefined for the given input (e.g. AP with a single label class).
class MetricError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// CSV / model / report parsing failure. Carries row and column when known.
class IngestError : public std::runtime_error {
public:
    IngestError(const std::string& what, long row = -1, long column = -1)
        : std::runtime_error(format(what, row, column)), row_(row), column_(column) {}

    long row() const noexcept { return row_; }
    long column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, long row, long column) {
        std::string msg = what;
        if (row >= 0) msg += " (row " + std::to_string(row);
        if (column >= 0) msg += (row >= 0 ? ", column " : " (column ") + std::to_string(column);
        if (row >= 0 || column >= 0) msg += ")";
        return msg;
    }

    long row_;
    long column_;
};

/// Report files written by an incompatible tool version.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bae
