#pragma once

#include <stdexcept>
#include <string>

namespace gcdr {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shapes that cannot be combined (matmul mismatch, kernel larger than input, ...).
class DimensionError : public Error {
public:
    using Error::Error;
};

// Malformed serialized data: bad magic, unsupported version, corrupt structure.
class FormatError : public Error {
public:
    using Error::Error;
};

// Payload shorter/longer than its header claims.
class LengthError : public FormatError {
public:
    using FormatError::FormatError;
};

// A value outside its documented domain (palette index, batch size < 1, ...).
class RangeError : public Error {
public:
    using Error::Error;
};

// A value with the right type/range but inconsistent content (duplicate name,
// non-0/1 mask entry, attribute outside its schema cardinality, ...).
class ValueError : public Error {
public:
    using Error::Error;
};

// Unknown identifier (parameter name, config key, variant name).
class LookupError : public Error {
public:
    using Error::Error;
};

// Stored artifact disagrees with the schema the caller expects.
class SchemaError : public Error {
public:
    using Error::Error;
};

// A collection too small for the requested operation.
class SizeError : public Error {
public:
    using Error::Error;
};

// A collection unexpectedly empty (e.g. every augmented sample screened out).
class EmptinessError : public Error {
public:
    using Error::Error;
};

// Invalid run configuration (missing mandatory key, unparsable value).
class ConfigError : public Error {
public:
    using Error::Error;
};

// A metric is undefined on the given inputs (single-class AUC, < 2 domains).
class MetricError : public Error {
public:
    using Error::Error;
};

// Non-finite number where a finite one is required (loss, gradient).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace gcdr
