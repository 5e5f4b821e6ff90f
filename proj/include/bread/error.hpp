#pragma once

#include <stdexcept>
#include <string>

namespace bread {

/// Root of every exception thrown by the library. The CLI maps the
/// subclasses onto process exit codes (see tools/bread_main.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Planes or tensors whose shapes disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Spatial size violates a contract (divisibility, minimum size, crop size).
class SizeError : public Error {
public:
    using Error::Error;
};

/// Invalid network topology description.
class SpecError : public Error {
public:
    using Error::Error;
};

/// A loss or reduction produced NaN/Inf. term() names the offending term.
class NumericError : public Error {
public:
    NumericError(std::string term, const std::string& what)
        : Error(what), term_(std::move(term)) {}
    const std::string& term() const noexcept { return term_; }

private:
    std::string term_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Bad magic, version, or truncation in a serialized file.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Missing or inconsistent dataset files.
class DataError : public Error {
public:
    using Error::Error;
};

/// Malformed run configuration or CLI arguments.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A training stage was requested before the stage it depends on.
class DependencyError : public Error {
public:
    using Error::Error;
};

/// Inference bundle with missing or mutually inconsistent checkpoints.
class BundleError : public Error {
public:
    using Error::Error;
};

/// Invalid or degenerate statistical model (NIQE).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Wrong number of inputs to a variadic operation.
class ArityError : public Error {
public:
    using Error::Error;
};

}  // namespace bread
