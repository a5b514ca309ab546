#pragma once

#include <stdexcept>
#include <string>

namespace einform {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Multi-index or axis outside the valid range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Extents that do not agree (operands, DOF vectors, result arrays).
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Layout strings that are not permutations of each other or miss a letter.
class LayoutError : public Error {
public:
    using Error::Error;
};

/// Operation needs a contiguous row-major tensor; materialize with contiguous() first.
class RequiresCopyError : public Error {
public:
    using Error::Error;
};

/// Malformed einsum subscripts or weak-form terms.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Factor count does not match the argument count.
class ArityError : public Error {
public:
    using Error::Error;
};

/// Contraction path referencing operands that do not exist.
class PathError : public Error {
public:
    using Error::Error;
};

/// Unknown or invalid argument (differentiation variable, form name, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Evaluation mode incompatible with the form's arguments.
class ModeError : public Error {
public:
    using Error::Error;
};

/// Unsupported spatial dimension or approximation order.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Cell whose reference mapping has a non-positive Jacobian determinant.
class DegenerateCellError : public Error {
public:
    using Error::Error;
};

/// File that cannot be written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace einform
