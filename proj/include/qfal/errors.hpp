#pragma once

#include <stdexcept>
#include <string>

namespace qfal {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A transition row does not sum to one.
class RowSumError : public Error {
public:
    using Error::Error;
};

/// A scalar is outside its admissible range (discount, probability, index).
class RangeError : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class SingularMatrix : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

/// Simplex pivoting exceeded its iteration budget.
class IterationLimit : public Error {
public:
    using Error::Error;
};

/// An iterative attack solver stopped before reaching its tolerance.
class SolverStall : public Error {
public:
    using Error::Error;
};

} // namespace qfal
